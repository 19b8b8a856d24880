#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "streamlp/graph.hpp"
#include "streamlp/session.hpp"
#include "streamlp/types.hpp"

namespace streamlp {

struct AblationConfig {
  std::string name;
  HyperParams hyper;
  ReweightSwitches reweight;
  bool use_fewshot = false;
  bool baseline_only = false;  // nearest prototype, no graph at all
};

struct AblationCell {
  AblationConfig config;
  std::vector<double> accuracies;  // one per dataset, online protocol
  double mean = 0.0;
};

struct AblationTable {
  std::vector<AblationCell> cells;
  std::size_t grid_rows = 0;  // non-zero for a k_prototype x k_test sweep
  std::size_t grid_cols = 0;
};

/// Component study: nearest prototype, plain propagation, text re-weighting,
/// few-shot anchors, few-shot re-weighting.
std::vector<AblationConfig> component_configs();

/// Row-major k_prototype x k_test sweep at default settings otherwise.
std::vector<AblationConfig> knn_grid(std::span<const std::size_t> k_prototype,
                                     std::span<const std::size_t> k_test);

/// Runs every configuration on every dataset. Datasets need ground-truth labels.
AblationTable ablate(std::span<const StreamInputs> datasets,
                     std::span<const AblationConfig> configs);

std::string format_table(const AblationTable& table);
std::string to_json(const AblationTable& table);

/// Stream order whose first `fraction` of arrivals are hard samples (those the
/// nearest-prototype rule gets wrong), followed by the remaining samples in a
/// seeded random order. Needs ground-truth labels.
std::vector<std::size_t> hard_first_order(const StreamInputs& inputs, double fraction,
                                          std::uint64_t seed);

/// Copy of `inputs` with tests (and their labels) permuted by `order`.
StreamInputs reordered(const StreamInputs& inputs, std::span<const std::size_t> order);

}  // namespace streamlp
