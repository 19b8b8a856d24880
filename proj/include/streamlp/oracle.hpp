#pragma once

// Brute-force reference implementations. Everything here is dense and naive
// on purpose and shares no kernels with the sparse engine: similarities,
// neighbour selection, normalization and propagation are all recomputed with
// Eigen so that agreement between the two is meaningful.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "streamlp/graph.hpp"
#include "streamlp/types.hpp"

namespace streamlp::oracle {

class OracleSingular : public Error {
 public:
  using Error::Error;
};

/// Fixed point of Y = alpha W Y + (1 - alpha) Y0, i.e. (1 - alpha)(I - alpha W)^-1 Y0,
/// by dense LU. Requires alpha < 1 and at most 500 nodes.
Eigen::MatrixXd closed_form_lp(const Eigen::MatrixXd& normalized_adjacency,
                               const Eigen::MatrixXd& initial_labels, double alpha);

using SimilarityFn =
    std::function<double(std::span<const double> query, std::span<const double> candidate)>;

/// Scores every candidate, fully sorts (score descending, id ascending) and
/// keeps the first k, clamping weights at zero.
std::vector<Edge> exhaustive_knn(std::span<const double> query,
                                 std::span<const Embedding> candidates, NodeId first_id,
                                 std::size_t k, const SimilarityFn& similarity);

struct DenseProblem {
  std::span<const Embedding> prototypes;  // one per class, in class order
  std::span<const Embedding> fewshot;     // class ids taken from the embeddings
  std::span<const Embedding> tests;
  const ContextStats* stats = nullptr;
  HyperParams hyper;
  ReweightSwitches switches;
};

/// Dense normalized adjacency over [prototypes | few-shot | tests] built from
/// scratch: exhaustive per-block KNN, W + W^T, elementwise power, symmetric
/// degree normalization.
Eigen::MatrixXd dense_normalized_graph(const DenseProblem& problem);

/// Transductive predictions for every test node: dense graph, T propagation
/// steps with anchor reset, argmax with nearest-prototype fallback for nodes
/// that receive no label mass. Limited to 500 nodes.
std::vector<std::size_t> dense_pipeline(const DenseProblem& problem);

}  // namespace streamlp::oracle
