#include "streamlp/propagate.hpp"

#include <algorithm>
#include <string>

namespace streamlp {

LabelState init_labels(std::size_t classes, std::span<const std::size_t> fewshot_labels,
                       std::size_t test_rows) {
  if (classes < 2) throw ConfigError("at least two classes are required");
  LabelState labels(classes, fewshot_labels.size(), test_rows);
  for (std::size_t c = 0; c < classes; ++c) labels.prototype_row(c)[c] = 1.0;
  for (std::size_t i = 0; i < fewshot_labels.size(); ++i) {
    if (fewshot_labels[i] >= classes) {
      throw InvalidLabel("few-shot label " + std::to_string(fewshot_labels[i]) +
                         " out of range for " + std::to_string(classes) + " classes");
    }
    labels.fewshot_row(i)[fewshot_labels[i]] = 1.0;
  }
  return labels;
}

LabelState propagate_step(const LabelState& labels, const NormalizedGraph& graph, double alpha,
                          const LabelState& initial) {
  LabelState next = initial;
  const std::size_t classes = labels.classes();
  const Matrix& y = labels.scores();
  const Matrix& y0 = initial.scores();
  Matrix& out = next.scores();
  std::vector<double> acc(classes);

  for (std::size_t i = 0; i < out.rows(); ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    const auto cols = graph.neighbors(i);
    const auto vals = graph.weights(i);
    for (std::size_t e = 0; e < cols.size(); ++e) {
      const auto src = y.row(cols[e]);
      for (std::size_t c = 0; c < classes; ++c) acc[c] += vals[e] * src[c];
    }
    auto dst = out.row(i);
    const auto base = y0.row(i);
    for (std::size_t c = 0; c < classes; ++c) {
      dst[c] = alpha * acc[c] + (1.0 - alpha) * base[c];
    }
  }
  return next;
}

void reset_labels(LabelState& labels, const LabelState& initial) {
  Matrix& y = labels.scores();
  const Matrix& y0 = initial.scores();
  const std::size_t anchors = labels.test_offset();
  std::copy_n(y0.data().begin(), anchors * labels.classes(), y.data().begin());
}

LabelState run_propagation(const NormalizedGraph& graph, const LabelState& initial,
                           const PropagationOptions& options,
                           const PropagationObserver& observer) {
  if (graph.num_nodes() != initial.rows()) {
    throw ConfigError("label matrix rows do not match graph size");
  }
  LabelState labels = initial;
  for (std::size_t t = 0; t < options.iters; ++t) {
    labels = propagate_step(labels, graph, options.alpha, initial);
    if (options.reset) reset_labels(labels, initial);
    if (observer) observer(t + 1, labels);
  }
  return labels;
}

LabelState run_propagation(const NormalizedGraph& graph, const LabelState& initial,
                           const HyperParams& hyper, const PropagationObserver& observer) {
  return run_propagation(graph, initial, PropagationOptions{hyper.alpha, hyper.iters, true},
                         observer);
}

std::optional<std::size_t> argmax(std::span<const double> row) {
  bool any_nonzero = false;
  std::size_t best = 0;
  for (std::size_t c = 0; c < row.size(); ++c) {
    if (row[c] != 0.0) any_nonzero = true;
    if (row[c] > row[best]) best = c;
  }
  if (!any_nonzero) return std::nullopt;
  return best;
}

std::size_t predict(const LabelState& labels, std::size_t test_index,
                    std::span<const double> prototype_scores) {
  if (auto c = argmax(labels.test_row(test_index))) return *c;
  std::size_t best = 0;
  for (std::size_t c = 1; c < prototype_scores.size(); ++c) {
    if (prototype_scores[c] > prototype_scores[best]) best = c;
  }
  return best;
}

Matrix attenuate(const LabelState& final_labels, double beta) {
  const std::size_t n = final_labels.test_rows();
  Matrix carry(n + 1, final_labels.classes());
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = final_labels.test_row(i);
    if (auto c = argmax(row)) carry(i, *c) = beta * row[*c];
  }
  return carry;
}

}  // namespace streamlp
