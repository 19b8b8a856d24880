#include "streamlp/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "streamlp/graph.hpp"
#include "streamlp/reweight.hpp"
#include "streamlp/session.hpp"
#include "streamlp/synthetic.hpp"

namespace streamlp {

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw ConfigError("loglog_slope needs two or more points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

namespace {

/// Fastest of up to `max_runs` runs, stopping once `budget` seconds are spent.
template <class Fn>
double fastest_run(Fn&& fn, std::size_t max_runs, double budget) {
  using clock = std::chrono::steady_clock;
  double best = 0.0, spent = 0.0;
  for (std::size_t r = 0; r < std::max<std::size_t>(max_runs, 1); ++r) {
    const auto start = clock::now();
    fn(r == 0);
    const double t = std::chrono::duration<double>(clock::now() - start).count();
    best = r == 0 ? t : std::min(best, t);
    spent += t;
    if (spent >= budget) break;
  }
  return best;
}

}  // namespace

BenchReport bench_construction(const BenchConfig& config) {
  if (config.node_counts.size() < 2) throw ConfigError("bench needs at least two sizes");
  const std::size_t max_nodes =
      *std::max_element(config.node_counts.begin(), config.node_counts.end());

  SyntheticConfig synth;
  synth.classes = config.classes;
  synth.per_class = (max_nodes + config.classes - 1) / config.classes;
  synth.dim = config.dim;
  synth.noise = 0.3;
  synth.seed = config.seed;
  const StreamInputs inputs = make_inputs(generate_synthetic(synth), false);
  const ContextStats stats = compute_prototype_stats(inputs.prototypes);
  const HyperParams hyper;
  const EdgeCapacity capacity = EdgeCapacity::from(hyper);
  const std::span<const Embedding> no_fewshot;

  BenchReport report;
  report.audited = config.audit;

  for (std::size_t n : config.node_counts) {
    BenchRow row;
    row.nodes = n;
    const std::span<const Embedding> stream(inputs.tests.data(), n);
    std::vector<TestRow> new_rows;

    row.dynamic_seconds = fastest_run(
        [&](bool first) {
          BoundedRowGraph graph(inputs.prototypes, no_fewshot, stats, capacity);
          for (std::size_t i = 0; i < n; ++i) {
            graph.expand(stream[i]);
            const auto normalized = finalize(graph, hyper.gamma);
            if (config.audit && first) new_rows.push_back(graph.row(i));
          }
        },
        config.max_runs, config.run_budget);
    row.static_seconds = fastest_run(
        [&](bool first) {
          for (std::size_t i = 0; i < n; ++i) {
            const auto graph = BoundedRowGraph::build_static(
                inputs.prototypes, no_fewshot, stream.first(i + 1), stats, capacity);
            const auto normalized = finalize(graph, hyper.gamma);
            if (config.audit && first && !(graph.row(i) == new_rows[i])) ++row.audit_mismatches;
          }
        },
        config.max_runs, config.run_budget);
    report.rows.push_back(row);
  }

  std::vector<double> sizes, stat, dyn;
  for (const auto& r : report.rows) {
    sizes.push_back(static_cast<double>(r.nodes));
    stat.push_back(r.static_seconds);
    dyn.push_back(r.dynamic_seconds);
  }
  report.static_exponent = loglog_slope(sizes, stat);
  report.dynamic_exponent = loglog_slope(sizes, dyn);
  return report;
}

std::string to_json(const BenchReport& report) {
  nlohmann::json j;
  j["static_exponent"] = report.static_exponent;
  j["dynamic_exponent"] = report.dynamic_exponent;
  j["audited"] = report.audited;
  auto& rows = j["rows"] = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"nodes", r.nodes},
                    {"static_seconds", r.static_seconds},
                    {"dynamic_seconds", r.dynamic_seconds},
                    {"speedup", r.static_seconds / r.dynamic_seconds},
                    {"audit_mismatches", r.audit_mismatches}});
  }
  return j.dump(2) + "\n";
}

std::string format_table(const BenchReport& report) {
  std::ostringstream out;
  out << fmt::format("{:>8} {:>14} {:>14} {:>9}\n", "nodes", "static [s]", "dynamic [s]",
                     "speedup");
  for (const auto& r : report.rows) {
    out << fmt::format("{:>8} {:>14.3f} {:>14.3f} {:>8.1f}x", r.nodes, r.static_seconds,
                       r.dynamic_seconds, r.static_seconds / r.dynamic_seconds);
    if (report.audited) out << fmt::format("  audit mismatches: {}", r.audit_mismatches);
    out << "\n";
  }
  out << fmt::format("growth exponent: static {:.2f}, dynamic {:.2f}\n", report.static_exponent,
                     report.dynamic_exponent);
  return out.str();
}

}  // namespace streamlp
