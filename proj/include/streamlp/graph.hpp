#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "streamlp/types.hpp"

namespace streamlp {

/// Global node index. Nodes are laid out as [prototypes | few-shot | tests],
/// the same row order as LabelState.
using NodeId = std::uint32_t;

struct Edge {
  NodeId target;
  double weight;

  bool operator==(const Edge&) const = default;
};

struct EdgeCapacity {
  std::size_t prototype = 3;
  std::size_t test = 8;
  std::size_t fewshot = 8;

  static EdgeCapacity from(const HyperParams& hyper) {
    return {hyper.k_prototype, hyper.k_test, hyper.k_fewshot};
  }
};

/// Which edge types use context-aware similarities. Turning a switch off
/// falls back to the plain inner product of the unit embeddings.
struct ReweightSwitches {
  bool text_tests = true;       // test -> test edges, weighted by prototype variance
  bool text_prototypes = true;  // test -> prototype edges, same weighting
  bool fewshot = true;          // test -> few-shot edges, inverse few-shot variance

  bool operator==(const ReweightSwitches&) const = default;
};

/// Top-k of `scores` (candidate j has id first_id + j), best first. Ties go to
/// the lower id. Weights are the scores clamped at zero.
std::vector<Edge> knn_edges(std::span<const double> scores, NodeId first_id, std::size_t k);

/// Scores every row of `candidate_keys` against `query` and selects as above.
std::vector<Edge> knn_edges(std::span<const double> query, const Matrix& candidate_keys,
                            NodeId first_id, std::size_t k);

/// Bounded-degree replacement for a single row: appends while the row is
/// below capacity, otherwise swaps out the weakest edge (lowest id among equal
/// weights) when `similarity` beats it. Returns true if the row changed.
bool offer_edge(std::vector<Edge>& edges, NodeId target, double similarity,
                std::size_t capacity);

/// Outgoing edges of one test node, split by the block of the target.
struct TestRow {
  std::vector<Edge> prototype_edges;
  std::vector<Edge> test_edges;
  std::vector<Edge> fewshot_edges;

  bool operator==(const TestRow&) const = default;
};

/// The sparse affinity matrix before symmetrization. Only test rows own edges;
/// prototype and few-shot rows stay empty and pick up connectivity from the
/// transpose during finalize().
///
/// Not thread-safe: expand() mutates and must be serialized per session.
class BoundedRowGraph {
 public:
  /// `stats` must carry var_p when any text switch is on, and var_l when
  /// few-shot re-weighting is on and `fewshot` is non-empty.
  BoundedRowGraph(std::span<const Embedding> prototypes, std::span<const Embedding> fewshot,
                  const ContextStats& stats, EdgeCapacity capacity,
                  ReweightSwitches switches = {});

  /// Inserts a test node: builds its own row by exhaustive KNN in each block,
  /// then offers the new node to every existing test row. O(d * N).
  /// Returns the test index of the new node.
  std::size_t expand(const Embedding& test);

  /// Builds every test row from scratch by exhaustive search over the full
  /// node set. Used as the reference for expand().
  static BoundedRowGraph build_static(std::span<const Embedding> prototypes,
                                      std::span<const Embedding> fewshot,
                                      std::span<const Embedding> tests,
                                      const ContextStats& stats, EdgeCapacity capacity,
                                      ReweightSwitches switches = {});

  std::size_t dim() const { return dim_; }
  std::size_t num_prototypes() const { return prototypes_.rows(); }
  std::size_t num_fewshot() const { return fewshot_.rows(); }
  std::size_t num_tests() const { return rows_.size(); }
  std::size_t num_nodes() const { return num_prototypes() + num_fewshot() + num_tests(); }

  NodeId prototype_node(std::size_t i) const { return static_cast<NodeId>(i); }
  NodeId fewshot_node(std::size_t i) const { return static_cast<NodeId>(num_prototypes() + i); }
  NodeId test_node(std::size_t i) const {
    return static_cast<NodeId>(num_prototypes() + num_fewshot() + i);
  }

  const TestRow& row(std::size_t test_index) const { return rows_[test_index]; }
  const EdgeCapacity& capacity() const { return capacity_; }
  const ReweightSwitches& switches() const { return switches_; }

  /// Similarity of a stored test node to every prototype, using the same
  /// weighting as its prototype edges.
  std::vector<double> prototype_scores(std::size_t test_index) const;

 private:
  void append_test_features(const Embedding& test);

  std::size_t dim_ = 0;
  EdgeCapacity capacity_;
  ReweightSwitches switches_;
  std::vector<double> var_p_;
  std::optional<std::vector<double>> var_l_;

  Matrix prototypes_;
  Matrix prototype_keys_;
  Matrix fewshot_;
  Matrix tests_;
  Matrix test_keys_;          // targets for test -> test similarity
  Matrix test_fewshot_keys_;  // test side of test -> few-shot similarity

  std::vector<TestRow> rows_;
  std::vector<double> scratch_;
};

/// D^-1/2 (W + W^T)^gamma D^-1/2 in compressed sparse row form. Symmetric by
/// construction (bitwise); isolated nodes are empty rows.
class NormalizedGraph {
 public:
  NormalizedGraph() = default;

  std::size_t num_nodes() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t num_entries() const { return columns_.size(); }

  std::span<const NodeId> neighbors(std::size_t i) const {
    return {columns_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  std::span<const double> weights(std::size_t i) const {
    return {values_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }

  /// Entry (i, j), zero when absent.
  double at(std::size_t i, std::size_t j) const;
  Matrix to_dense() const;

 private:
  friend NormalizedGraph finalize(const BoundedRowGraph& graph, double gamma);

  std::vector<std::size_t> offsets_;
  std::vector<NodeId> columns_;
  std::vector<double> values_;
};

/// Symmetrize, raise elementwise to `gamma`, then degree-normalize.
NormalizedGraph finalize(const BoundedRowGraph& graph, double gamma);

/// build_static() followed by finalize().
NormalizedGraph rebuild_static(std::span<const Embedding> prototypes,
                               std::span<const Embedding> fewshot,
                               std::span<const Embedding> tests, const ContextStats& stats,
                               const HyperParams& hyper, ReweightSwitches switches = {});

}  // namespace streamlp
