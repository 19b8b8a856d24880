#include "streamlp/reweight.hpp"

#include <cassert>

#include "streamlp/linalg.hpp"

namespace streamlp {

namespace {

void moments(std::span<const Embedding> samples, std::vector<double>& mean,
             std::vector<double>& var) {
  const std::size_t d = samples.front().dim();
  require_dim(samples, d);
  const double n = static_cast<double>(samples.size());
  mean.assign(d, 0.0);
  var.assign(d, 0.0);
  for (const auto& s : samples) {
    const auto v = s.values();
    for (std::size_t c = 0; c < d; ++c) mean[c] += v[c];
  }
  for (double& m : mean) m /= n;
  for (const auto& s : samples) {
    const auto v = s.values();
    for (std::size_t c = 0; c < d; ++c) {
      const double dev = v[c] - mean[c];
      var[c] += dev * dev;
    }
  }
  for (double& x : var) x /= n;
}

}  // namespace

ContextStats compute_prototype_stats(std::span<const Embedding> prototypes) {
  if (prototypes.size() < 2) {
    throw StatsDegenerate("prototype statistics need at least two prototypes");
  }
  ContextStats stats;
  moments(prototypes, stats.mu_p, stats.var_p);
  return stats;
}

ContextStats compute_fewshot_stats(std::span<const Embedding> fewshot) {
  ContextStats stats;
  if (fewshot.empty()) return stats;
  if (fewshot.size() < 2) {
    throw StatsDegenerate("few-shot statistics need at least two samples");
  }
  std::vector<double> mu, var;
  moments(fewshot, mu, var);
  stats.mu_l = std::move(mu);
  stats.var_l = std::move(var);
  return stats;
}

std::vector<double> text_key(std::span<const double> target, std::span<const double> var_p) {
  assert(target.size() == var_p.size());
  std::vector<double> key(target.size());
  for (std::size_t c = 0; c < key.size(); ++c) key[c] = var_p[c] * target[c];
  linalg::normalize_in_place(key);
  return key;
}

std::vector<double> fewshot_key(std::span<const double> target,
                                std::span<const double> var_l) {
  assert(target.size() == var_l.size());
  std::vector<double> key(target.size());
  for (std::size_t c = 0; c < key.size(); ++c) {
    key[c] = target[c] / (var_l[c] + kFewShotVarianceEpsilon);
  }
  linalg::normalize_in_place(key);
  return key;
}

double text_reweighted_similarity(std::span<const double> query,
                                  std::span<const double> target,
                                  std::span<const double> var_p) {
  const auto key = text_key(target, var_p);
  return clamp_similarity(linalg::dot(query, key));
}

double text_reweighted_similarity(const Embedding& query, const Embedding& target,
                                  std::span<const double> var_p) {
  if (query.dim() != target.dim()) throw DimensionMismatch(query.dim(), target.dim());
  return text_reweighted_similarity(query.values(), target.values(), var_p);
}

double fewshot_reweighted_similarity(std::span<const double> fewshot_sample,
                                     std::span<const double> test,
                                     std::span<const double> var_l) {
  const auto key = fewshot_key(test, var_l);
  return clamp_similarity(linalg::dot(fewshot_sample, key));
}

double fewshot_reweighted_similarity(const Embedding& fewshot_sample, const Embedding& test,
                                     std::span<const double> var_l) {
  if (fewshot_sample.dim() != test.dim()) {
    throw DimensionMismatch(fewshot_sample.dim(), test.dim());
  }
  return fewshot_reweighted_similarity(fewshot_sample.values(), test.values(), var_l);
}

}  // namespace streamlp
