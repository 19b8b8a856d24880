#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace streamlp {

struct BenchConfig {
  std::vector<std::size_t> node_counts{500, 1000, 2000, 4000};
  std::size_t dim = 64;
  std::size_t classes = 10;
  std::uint64_t seed = 0;
  /// Compare the dynamic new row against the static one at every arrival.
  bool audit = false;
  /// Each column reports its fastest run. Runs repeat up to max_runs times
  /// until run_budget seconds have been spent on that column.
  std::size_t max_runs = 5;
  double run_budget = 3.0;
};

struct BenchRow {
  std::size_t nodes = 0;          // test arrivals in the stream
  double static_seconds = 0.0;    // rebuild from scratch at every arrival
  double dynamic_seconds = 0.0;   // expand at every arrival
  std::size_t audit_mismatches = 0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  double static_exponent = 0.0;   // slope of log(time) against log(N)
  double dynamic_exponent = 0.0;
  bool audited = false;
};

/// Least-squares slope of log(y) on log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

/// Times both construction strategies over synthetic streams of each size.
/// Each arrival includes normalization of the updated graph, so both columns
/// measure the full per-arrival graph cost.
BenchReport bench_construction(const BenchConfig& config);

std::string to_json(const BenchReport& report);
std::string format_table(const BenchReport& report);

}  // namespace streamlp
