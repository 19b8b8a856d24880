#include "streamlp/graph.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "streamlp/linalg.hpp"
#include "streamlp/reweight.hpp"

namespace streamlp {

namespace {

constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

struct Candidate {
  double score;
  NodeId id;
};

// Higher score first, lower id on ties.
inline bool ranks_before(const Candidate& a, const Candidate& b) {
  return a.score > b.score || (a.score == b.score && a.id < b.id);
}

inline Edge to_edge(const Candidate& c) { return {c.id, std::max(0.0, c.score)}; }

// Scores the first `count` rows of `rows` against `v`.
void score_prefix(std::span<const double> v, const Matrix& rows, std::size_t count,
                  std::vector<double>& out) {
  out.resize(count);
  linalg::dot_rows(v, rows, count, out);
  for (double& s : out) s = clamp_similarity(s);
}

// Best k candidates kept sorted, weakest last. Used by the static rebuild;
// the result does not depend on the order of offers.
class TopK {
 public:
  explicit TopK(std::size_t k) : k_(k) { best_.reserve(k); }

  void offer(double raw, NodeId id) {
    const double score = clamp_similarity(raw);
    if (k_ == 0 || score < floor_) return;
    const Candidate c{score, id};
    std::size_t pos = best_.size();
    if (pos == k_) {
      if (!ranks_before(c, best_.back())) return;
      --pos;
    } else {
      best_.push_back(c);
    }
    for (; pos > 0 && ranks_before(c, best_[pos - 1]); --pos) best_[pos] = best_[pos - 1];
    best_[pos] = c;
    if (best_.size() == k_) floor_ = best_.back().score;
  }

  /// offer() for scores[j] with ids first + j, skipping id `skip`.
  void offer_block(const double* scores, std::size_t count, NodeId first, NodeId skip) {
    // clamp is monotonic, so raw >= threshold() exactly when the clamped
    // score reaches floor_.
    double threshold = this->threshold();
    auto visit = [&](std::size_t j) {
      if (!(scores[j] >= threshold)) return;
      const auto id = static_cast<NodeId>(first + j);
      if (id == skip) return;
      offer(scores[j], id);
      threshold = this->threshold();
    };
    std::size_t j = 0;
    for (; j + 8 <= count; j += 8) {
      if (!linalg::any_at_least8(scores + j, threshold)) continue;
      for (std::size_t t = 0; t < 8; ++t) visit(j + t);
    }
    for (; j < count; ++j) visit(j);
  }

  /// Best first. Leaves the selector empty.
  std::vector<Edge> take() {
    std::vector<Edge> edges;
    edges.reserve(best_.size());
    for (const auto& c : best_) edges.push_back(to_edge(c));
    best_.clear();
    floor_ = -2.0;
    return edges;
  }

 private:
  double threshold() const { return floor_ <= -1.0 ? -HUGE_VAL : floor_; }

  std::size_t k_;
  double floor_ = -2.0;  // below every clamped score until k are held
  std::vector<Candidate> best_;
};

}  // namespace

std::vector<Edge> knn_edges(std::span<const double> scores, NodeId first_id, std::size_t k) {
  std::vector<Candidate> best;
  if (k == 0) return {};
  best.reserve(k + 1);
  for (std::size_t j = 0; j < scores.size(); ++j) {
    const Candidate c{scores[j], static_cast<NodeId>(first_id + j)};
    if (best.size() == k && !ranks_before(c, best.back())) continue;
    auto pos = std::upper_bound(best.begin(), best.end(), c, ranks_before);
    best.insert(pos, c);
    if (best.size() > k) best.pop_back();
  }
  std::vector<Edge> edges;
  edges.reserve(best.size());
  for (const auto& c : best) edges.push_back(to_edge(c));
  return edges;
}

std::vector<Edge> knn_edges(std::span<const double> query, const Matrix& candidate_keys,
                            NodeId first_id, std::size_t k) {
  std::vector<double> scores;
  score_prefix(query, candidate_keys, candidate_keys.rows(), scores);
  return knn_edges(scores, first_id, k);
}

bool offer_edge(std::vector<Edge>& edges, NodeId target, double similarity,
                std::size_t capacity) {
  if (capacity == 0) return false;
  if (edges.size() < capacity) {
    edges.push_back({target, std::max(0.0, similarity)});
    return true;
  }
  auto weakest = edges.begin();
  for (auto it = edges.begin() + 1; it != edges.end(); ++it) {
    if (it->weight < weakest->weight ||
        (it->weight == weakest->weight && it->target < weakest->target)) {
      weakest = it;
    }
  }
  if (!(similarity > weakest->weight)) return false;
  *weakest = {target, similarity};
  return true;
}

// ---------------------------------------------------------------------------
// BoundedRowGraph
// ---------------------------------------------------------------------------

BoundedRowGraph::BoundedRowGraph(std::span<const Embedding> prototypes,
                                 std::span<const Embedding> fewshot,
                                 const ContextStats& stats, EdgeCapacity capacity,
                                 ReweightSwitches switches)
    : capacity_(capacity), switches_(switches) {
  if (prototypes.empty()) throw ConfigError("graph needs at least one prototype");
  dim_ = prototypes.front().dim();
  require_dim(prototypes, dim_);
  require_dim(fewshot, dim_);

  if (switches_.text_tests || switches_.text_prototypes) {
    if (stats.var_p.size() != dim_) {
      throw ConfigError("text re-weighting needs prototype variances of matching dimension");
    }
    var_p_ = stats.var_p;
  }
  if (switches_.fewshot && !fewshot.empty()) {
    if (!stats.var_l || stats.var_l->size() != dim_) {
      throw ConfigError("few-shot re-weighting needs few-shot variances of matching dimension");
    }
    var_l_ = stats.var_l;
  }

  prototypes_ = Matrix(0, dim_);
  prototype_keys_ = Matrix(0, dim_);
  fewshot_ = Matrix(0, dim_);
  tests_ = Matrix(0, dim_);
  test_keys_ = Matrix(0, dim_);
  test_fewshot_keys_ = Matrix(0, dim_);

  for (const auto& p : prototypes) {
    prototypes_.append_row(p.values());
    if (switches_.text_prototypes) {
      prototype_keys_.append_row(text_key(p.values(), var_p_));
    } else {
      prototype_keys_.append_row(p.values());
    }
  }
  for (const auto& l : fewshot) fewshot_.append_row(l.values());
}

void BoundedRowGraph::append_test_features(const Embedding& test) {
  if (test.kind() != NodeKind::Test) throw ConfigError("expand() expects a test embedding");
  if (test.dim() != dim_) throw DimensionMismatch(dim_, test.dim());
  tests_.append_row(test.values());
  if (switches_.text_tests) {
    test_keys_.append_row(text_key(test.values(), var_p_));
  } else {
    test_keys_.append_row(test.values());
  }
  if (var_l_) {
    test_fewshot_keys_.append_row(fewshot_key(test.values(), *var_l_));
  } else {
    test_fewshot_keys_.append_row(test.values());
  }
}

std::size_t BoundedRowGraph::expand(const Embedding& test) {
  const std::size_t existing = num_tests();
  append_test_features(test);
  const auto query = tests_.row(existing);
  const auto key = test_keys_.row(existing);

  TestRow row;
  score_prefix(query, prototype_keys_, prototype_keys_.rows(), scratch_);
  row.prototype_edges = knn_edges(scratch_, prototype_node(0), capacity_.prototype);

  if (capacity_.test > 0 && existing > 0) {
    score_prefix(query, test_keys_, existing, scratch_);
    row.test_edges = knn_edges(scratch_, test_node(0), capacity_.test);
  }
  if (capacity_.fewshot > 0 && num_fewshot() > 0) {
    score_prefix(test_fewshot_keys_.row(existing), fewshot_, num_fewshot(), scratch_);
    row.fewshot_edges = knn_edges(scratch_, fewshot_node(0), capacity_.fewshot);
  }

  // Offer the newcomer to every existing test row: one similarity each, then
  // at most one replacement of the row's weakest test edge.
  if (capacity_.test > 0 && existing > 0) {
    score_prefix(key, tests_, existing, scratch_);
    const NodeId new_id = test_node(existing);
    for (std::size_t i = 0; i < existing; ++i) {
      offer_edge(rows_[i].test_edges, new_id, scratch_[i], capacity_.test);
    }
  }

  rows_.push_back(std::move(row));
  return existing;
}

BoundedRowGraph BoundedRowGraph::build_static(std::span<const Embedding> prototypes,
                                              std::span<const Embedding> fewshot,
                                              std::span<const Embedding> tests,
                                              const ContextStats& stats, EdgeCapacity capacity,
                                              ReweightSwitches switches) {
  BoundedRowGraph graph(prototypes, fewshot, stats, capacity, switches);
  const std::size_t n = tests.size();
  const std::size_t d = graph.dim_;
  graph.tests_.reserve_rows(n);
  graph.test_keys_.reserve_rows(n);
  graph.test_fewshot_keys_.reserve_rows(n);
  for (const auto& t : tests) graph.append_test_features(t);
  graph.rows_.reserve(n);

  // Test-test scores go through blocks of queries against key chunks small
  // enough to stay in cache, four queries per pass over a chunk.
  constexpr std::size_t kQueries = 16;
  constexpr std::size_t kChunk = 256;
  std::vector<TopK> top(kQueries, TopK(capacity.test));
  TopK top_prototypes(capacity.prototype), top_fewshot(capacity.fewshot);
  std::vector<double> scratch(4 * kChunk), scores;
  const NodeId first = graph.test_node(0);

  for (std::size_t i0 = 0; i0 < n; i0 += kQueries) {
    const std::size_t m = std::min(kQueries, n - i0);
    if (capacity.test > 0) {
      for (std::size_t j0 = 0; j0 < n; j0 += kChunk) {
        const std::size_t count = std::min(kChunk, n - j0);
        const double* keys = graph.test_keys_.row(j0).data();
        for (std::size_t g = 0; g < m; g += 4) {
          std::array<const double*, 4> queries{};
          std::array<double*, 4> out{};
          for (std::size_t k = 0; k < 4; ++k) {
            queries[k] = graph.tests_.row(i0 + std::min(g + k, m - 1)).data();
            out[k] = scratch.data() + k * kChunk;
          }
          linalg::dot_rows4(queries, keys, d, count, out);
          for (std::size_t k = 0; k < 4 && g + k < m; ++k) {
            top[g + k].offer_block(out[k], count, static_cast<NodeId>(first + j0),
                                   static_cast<NodeId>(first + i0 + g + k));
          }
        }
      }
    }
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t i = i0 + k;
      TestRow& row = graph.rows_.emplace_back();
      score_prefix(graph.tests_.row(i), graph.prototype_keys_, graph.prototype_keys_.rows(),
                   scores);
      top_prototypes.offer_block(scores.data(), scores.size(), graph.prototype_node(0),
                                 kNoNode);
      row.prototype_edges = top_prototypes.take();
      row.test_edges = top[k].take();
      if (capacity.fewshot > 0 && graph.num_fewshot() > 0) {
        score_prefix(graph.test_fewshot_keys_.row(i), graph.fewshot_, graph.num_fewshot(),
                     scores);
        top_fewshot.offer_block(scores.data(), scores.size(), graph.fewshot_node(0), kNoNode);
        row.fewshot_edges = top_fewshot.take();
      }
    }
  }
  return graph;
}

std::vector<double> BoundedRowGraph::prototype_scores(std::size_t test_index) const {
  std::vector<double> scores;
  score_prefix(tests_.row(test_index), prototype_keys_, prototype_keys_.rows(), scores);
  return scores;
}

// ---------------------------------------------------------------------------
// NormalizedGraph
// ---------------------------------------------------------------------------

double NormalizedGraph::at(std::size_t i, std::size_t j) const {
  const auto cols = neighbors(i);
  auto it = std::lower_bound(cols.begin(), cols.end(), static_cast<NodeId>(j));
  if (it == cols.end() || *it != j) return 0.0;
  return weights(i)[static_cast<std::size_t>(it - cols.begin())];
}

Matrix NormalizedGraph::to_dense() const {
  const std::size_t n = num_nodes();
  Matrix dense(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto cols = neighbors(i);
    const auto vals = weights(i);
    for (std::size_t e = 0; e < cols.size(); ++e) dense(i, cols[e]) = vals[e];
  }
  return dense;
}

NormalizedGraph finalize(const BoundedRowGraph& graph, double gamma) {
  const std::size_t n = graph.num_nodes();
  const std::size_t first_test = graph.num_nodes() - graph.num_tests();

  struct Directed {
    NodeId col;
    double weight;
  };

  // Reverse entries (j, i) for every stored edge i -> j. Sources are visited
  // in increasing order, so each reverse row comes out sorted by column.
  std::vector<std::size_t> offsets(n + 1, 0);
  std::size_t forward = 0;
  for (std::size_t t = 0; t < graph.num_tests(); ++t) {
    const auto& row = graph.row(t);
    for (const auto* list : {&row.prototype_edges, &row.fewshot_edges, &row.test_edges}) {
      for (const Edge& e : *list) {
        if (e.weight > 0.0) ++offsets[e.target + 1];
      }
      forward = std::max(forward, list->size());
    }
  }
  for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
  std::vector<Directed> reverse(offsets[n]);
  {
    std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
    for (std::size_t t = 0; t < graph.num_tests(); ++t) {
      const NodeId src = graph.test_node(t);
      const auto& row = graph.row(t);
      for (const auto* list : {&row.prototype_edges, &row.fewshot_edges, &row.test_edges}) {
        for (const Edge& e : *list) {
          if (e.weight > 0.0) reverse[cursor[e.target]++] = {src, e.weight};
        }
      }
    }
  }

  NormalizedGraph out;
  out.offsets_.assign(n + 1, 0);
  out.columns_.reserve(2 * reverse.size());
  out.values_.reserve(2 * reverse.size());
  std::vector<double> degree(n, 0.0);

  // Row i is the merge of its own edges with its reverse entries; a pair
  // present in both directions becomes one sum. The sum is symmetric, so an
  // entry below the diagonal reuses the power already taken for (j, i).
  // upper[j] walks row j's entries past the diagonal, which later rows reach
  // in column order.
  std::vector<std::size_t> upper(n, 0);
  std::vector<Directed> own;
  own.reserve(3 * forward);
  const auto by_col = [](const Directed& x, const Directed& y) { return x.col < y.col; };
  for (std::size_t i = 0; i < n; ++i) {
    own.clear();
    if (i >= first_test) {
      const auto& row = graph.row(i - first_test);
      // Blocks follow the node layout, so sorting within each block is enough.
      for (const auto* list : {&row.prototype_edges, &row.fewshot_edges, &row.test_edges}) {
        const auto block = own.end() - own.begin();
        for (const Edge& e : *list) {
          if (e.weight > 0.0) own.push_back({e.target, e.weight});
        }
        std::sort(own.begin() + block, own.end(), by_col);
      }
    }

    bool below = true;
    auto emit = [&](NodeId col, double sum) {
      double powered = 0.0;
      if (col < i) {
        std::size_t& u = upper[col];
        if (u < out.offsets_[col + 1] && out.columns_[u] == i) powered = out.values_[u++];
      } else {
        if (below) {
          upper[i] = out.columns_.size();
          below = false;
        }
        powered = std::pow(sum, gamma);
      }
      if (powered > 0.0) {
        out.columns_.push_back(col);
        out.values_.push_back(powered);
        degree[i] += powered;
      }
    };
    auto a = own.begin();
    auto r = reverse.begin() + static_cast<std::ptrdiff_t>(offsets[i]);
    const auto r_end = reverse.begin() + static_cast<std::ptrdiff_t>(offsets[i + 1]);
    while (a != own.end() || r != r_end) {
      if (r == r_end || (a != own.end() && a->col < r->col)) {
        emit(a->col, a->weight);
        ++a;
      } else if (a == own.end() || r->col < a->col) {
        emit(r->col, r->weight);
        ++r;
      } else {
        emit(a->col, a->weight + r->weight);
        ++a;
        ++r;
      }
    }
    if (below) upper[i] = out.columns_.size();
    out.offsets_[i + 1] = out.columns_.size();
  }

  std::vector<double> inv_sqrt(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (degree[i] > 0.0) inv_sqrt[i] = 1.0 / std::sqrt(degree[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t e = out.offsets_[i]; e < out.offsets_[i + 1]; ++e) {
      out.values_[e] *= inv_sqrt[i] * inv_sqrt[out.columns_[e]];
    }
  }
  return out;
}

NormalizedGraph rebuild_static(std::span<const Embedding> prototypes,
                               std::span<const Embedding> fewshot,
                               std::span<const Embedding> tests, const ContextStats& stats,
                               const HyperParams& hyper, ReweightSwitches switches) {
  const auto graph = BoundedRowGraph::build_static(prototypes, fewshot, tests, stats,
                                                   EdgeCapacity::from(hyper), switches);
  return finalize(graph, hyper.gamma);
}

}  // namespace streamlp
