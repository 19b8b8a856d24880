#include "streamlp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

namespace streamlp::oracle {

namespace {

constexpr std::size_t kMaxNodes = 500;
constexpr double kEps = 1e-8;  // same guard as the engine's few-shot weighting

Eigen::VectorXd as_vector(const Embedding& e) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(e.dim()));
  for (std::size_t c = 0; c < e.dim(); ++c) v(static_cast<Eigen::Index>(c)) = e.values()[c];
  return v;
}

Eigen::VectorXd as_vector(const std::vector<double>& x) {
  return Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
}

Eigen::VectorXd unit_or_zero(const Eigen::VectorXd& v) {
  const double n = v.norm();
  return n > 0.0 ? Eigen::VectorXd(v / n) : Eigen::VectorXd::Zero(v.size());
}

double bounded(double s) { return std::clamp(s, -1.0, 1.0); }

struct Scored {
  double score;
  std::size_t index;
};

// Full sort, best first, lower index on ties.
std::vector<Scored> ranked(std::vector<double> scores) {
  std::vector<Scored> all(scores.size());
  for (std::size_t j = 0; j < scores.size(); ++j) all[j] = {scores[j], j};
  std::sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.index < b.index;
  });
  return all;
}

// Similarities of test `u` to every member of a block, following the
// weighting rules of each edge type.
struct Weighting {
  const DenseProblem& p;
  Eigen::VectorXd var_p;
  Eigen::VectorXd inv_var_l;

  explicit Weighting(const DenseProblem& problem) : p(problem) {
    if (p.stats && !p.stats->var_p.empty()) var_p = as_vector(p.stats->var_p);
    if (p.stats && p.stats->var_l) {
      inv_var_l = as_vector(*p.stats->var_l).array().unaryExpr([](double v) {
        return 1.0 / (v + kEps);
      });
    }
  }

  double text(const Eigen::VectorXd& query, const Eigen::VectorXd& target, bool on) const {
    if (!on) return bounded(query.dot(target));
    return bounded(query.dot(unit_or_zero(var_p.cwiseProduct(target))));
  }

  double fewshot(const Eigen::VectorXd& sample, const Eigen::VectorXd& test) const {
    if (!p.switches.fewshot) return bounded(sample.dot(test));
    return bounded(sample.dot(unit_or_zero(inv_var_l.cwiseProduct(test))));
  }
};

}  // namespace

Eigen::MatrixXd closed_form_lp(const Eigen::MatrixXd& normalized_adjacency,
                               const Eigen::MatrixXd& initial_labels, double alpha) {
  const auto n = normalized_adjacency.rows();
  if (n != normalized_adjacency.cols() || n != initial_labels.rows()) {
    throw ConfigError("closed_form_lp: inconsistent matrix shapes");
  }
  if (static_cast<std::size_t>(n) > kMaxNodes) {
    throw ConfigError("closed_form_lp: at most 500 nodes");
  }
  if (!(alpha < 1.0)) throw ConfigError("closed_form_lp: alpha must be < 1");
  const Eigen::MatrixXd system =
      Eigen::MatrixXd::Identity(n, n) - alpha * normalized_adjacency;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (!lu.isInvertible()) throw OracleSingular("I - alpha W is singular");
  return (1.0 - alpha) * lu.solve(initial_labels);
}

std::vector<Edge> exhaustive_knn(std::span<const double> query,
                                 std::span<const Embedding> candidates, NodeId first_id,
                                 std::size_t k, const SimilarityFn& similarity) {
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (const auto& c : candidates) scores.push_back(similarity(query, c.values()));
  const auto order = ranked(std::move(scores));
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < std::min(k, order.size()); ++i) {
    edges.push_back({static_cast<NodeId>(first_id + order[i].index),
                     std::max(0.0, order[i].score)});
  }
  return edges;
}

Eigen::MatrixXd dense_normalized_graph(const DenseProblem& problem) {
  const std::size_t np = problem.prototypes.size();
  const std::size_t nl = problem.fewshot.size();
  const std::size_t nu = problem.tests.size();
  const std::size_t n = np + nl + nu;
  if (n > kMaxNodes) throw ConfigError("dense oracle: at most 500 nodes");
  const Weighting weighting(problem);

  std::vector<Eigen::VectorXd> protos, shots, tests;
  for (const auto& e : problem.prototypes) protos.push_back(as_vector(e));
  for (const auto& e : problem.fewshot) shots.push_back(as_vector(e));
  for (const auto& e : problem.tests) tests.push_back(as_vector(e));

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(n));
  const auto& sw = problem.switches;
  const auto& hp = problem.hyper;

  auto link = [&](std::size_t row, std::size_t offset, const std::vector<double>& scores,
                  std::size_t k, std::optional<std::size_t> skip) {
    std::vector<double> pool;
    std::vector<std::size_t> ids;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (skip && *skip == j) continue;
      pool.push_back(scores[j]);
      ids.push_back(j);
    }
    const auto order = ranked(pool);
    for (std::size_t i = 0; i < std::min(k, order.size()); ++i) {
      w(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(offset + ids[order[i].index])) =
          std::max(0.0, order[i].score);
    }
  };

  for (std::size_t i = 0; i < nu; ++i) {
    const std::size_t row = np + nl + i;
    std::vector<double> s;
    for (const auto& p : protos) s.push_back(weighting.text(tests[i], p, sw.text_prototypes));
    link(row, 0, s, hp.k_prototype, std::nullopt);

    s.clear();
    for (const auto& u : tests) s.push_back(weighting.text(tests[i], u, sw.text_tests));
    link(row, np + nl, s, hp.k_test, i);

    if (nl > 0) {
      s.clear();
      for (const auto& l : shots) s.push_back(weighting.fewshot(l, tests[i]));
      link(row, np, s, hp.k_fewshot, std::nullopt);
    }
  }

  const Eigen::MatrixXd sym = w + w.transpose();
  const Eigen::MatrixXd powered = sym.array().pow(hp.gamma).matrix();
  const Eigen::VectorXd degree = powered.rowwise().sum();
  const Eigen::VectorXd inv_sqrt =
      degree.unaryExpr([](double d) { return d > 0.0 ? 1.0 / std::sqrt(d) : 0.0; });
  return inv_sqrt.asDiagonal() * powered * inv_sqrt.asDiagonal();
}

std::vector<std::size_t> dense_pipeline(const DenseProblem& problem) {
  const std::size_t classes = problem.prototypes.size();
  const std::size_t np = classes;
  const std::size_t nl = problem.fewshot.size();
  const std::size_t nu = problem.tests.size();
  const auto wn = dense_normalized_graph(problem);
  const auto n = wn.rows();
  const auto cls = static_cast<Eigen::Index>(classes);

  Eigen::MatrixXd y0 = Eigen::MatrixXd::Zero(n, cls);
  for (std::size_t c = 0; c < classes; ++c) {
    y0(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c)) = 1.0;
  }
  for (std::size_t i = 0; i < nl; ++i) {
    const auto label = problem.fewshot[i].class_id().value();
    if (label >= classes) throw InvalidLabel("few-shot label out of range");
    y0(static_cast<Eigen::Index>(np + i), static_cast<Eigen::Index>(label)) = 1.0;
  }

  const auto anchors = static_cast<Eigen::Index>(np + nl);
  const double alpha = problem.hyper.alpha;
  Eigen::MatrixXd y = y0;
  for (std::size_t t = 0; t < problem.hyper.iters; ++t) {
    y = alpha * (wn * y) + (1.0 - alpha) * y0;
    y.topRows(anchors) = y0.topRows(anchors);
  }

  const Weighting weighting(problem);
  std::vector<std::size_t> predictions(nu);
  for (std::size_t i = 0; i < nu; ++i) {
    const auto r = static_cast<Eigen::Index>(np + nl + i);
    const Eigen::VectorXd row = y.row(r).transpose();
    if (row.cwiseAbs().maxCoeff() > 0.0) {
      Eigen::Index best = 0;
      for (Eigen::Index c = 1; c < cls; ++c) {
        if (row(c) > row(best)) best = c;
      }
      predictions[i] = static_cast<std::size_t>(best);
      continue;
    }
    const auto u = as_vector(problem.tests[i]);
    std::size_t best = 0;
    double best_score = -2.0;
    for (std::size_t c = 0; c < classes; ++c) {
      const double s =
          weighting.text(u, as_vector(problem.prototypes[c]), problem.switches.text_prototypes);
      if (s > best_score) {
        best_score = s;
        best = c;
      }
    }
    predictions[i] = best;
  }
  return predictions;
}

}  // namespace streamlp::oracle
