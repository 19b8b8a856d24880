#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "streamlp/graph.hpp"
#include "streamlp/types.hpp"

namespace streamlp {

/// Initial labels: identity for the prototypes, one-hot rows for the few-shot
/// exemplars, zeros for the tests. Throws ConfigError for fewer than two
/// classes and InvalidLabel for a few-shot label outside [0, classes).
LabelState init_labels(std::size_t classes, std::span<const std::size_t> fewshot_labels,
                       std::size_t test_rows);

/// alpha * W Y + (1 - alpha) * Y0.
LabelState propagate_step(const LabelState& labels, const NormalizedGraph& graph, double alpha,
                          const LabelState& initial);

/// Restores the prototype and few-shot blocks from `initial`; tests untouched.
void reset_labels(LabelState& labels, const LabelState& initial);

struct PropagationOptions {
  double alpha = 1.0;
  std::size_t iters = 3;
  /// Reset anchors after every step. Turning this off recovers the plain
  /// iteration whose fixed point is (1 - alpha)(I - alpha W)^-1 Y0.
  bool reset = true;
};

/// Called after each completed iteration (post-reset) with the 1-based
/// iteration number.
using PropagationObserver = std::function<void(std::size_t, const LabelState&)>;

/// `iters` steps starting from `initial`, each followed by reset_labels().
LabelState run_propagation(const NormalizedGraph& graph, const LabelState& initial,
                           const PropagationOptions& options,
                           const PropagationObserver& observer = {});
LabelState run_propagation(const NormalizedGraph& graph, const LabelState& initial,
                           const HyperParams& hyper, const PropagationObserver& observer = {});

/// Index of the largest entry, lowest index on ties; nullopt for an all-zero
/// (or empty) row.
std::optional<std::size_t> argmax(std::span<const double> row);

/// Argmax of the test row. An all-zero row (the node received no label mass)
/// falls back to the argmax of `prototype_scores`.
std::size_t predict(const LabelState& labels, std::size_t test_index,
                    std::span<const double> prototype_scores);

/// Carry-over test labels for the next arrival: each observed row keeps only
/// its argmax entry scaled by beta, and a zero row is appended for the
/// incoming sample. Result is (test_rows + 1) x classes.
Matrix attenuate(const LabelState& final_labels, double beta);

}  // namespace streamlp
