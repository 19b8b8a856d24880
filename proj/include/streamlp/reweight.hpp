#pragma once

#include <span>
#include <vector>

#include "streamlp/types.hpp"

namespace streamlp {

/// Added to few-shot variances before taking the reciprocal.
inline constexpr double kFewShotVarianceEpsilon = 1e-8;

/// Rounding can push the inner product of two unit vectors a hair past 1.
inline double clamp_similarity(double s) { return s > 1.0 ? 1.0 : (s < -1.0 ? -1.0 : s); }

/// Mean and population variance (divisor |P|) of each feature dimension over
/// the prototype set. Throws StatsDegenerate for fewer than two prototypes.
ContextStats compute_prototype_stats(std::span<const Embedding> prototypes);

/// Same statistics over the pooled few-shot set; only mu_l/var_l are set.
/// An empty set yields absent statistics (zero-shot); a single sample throws
/// StatsDegenerate.
ContextStats compute_fewshot_stats(std::span<const Embedding> fewshot);

/// Unit-normalized var_p ⊙ target. Zero when the weighted vector vanishes.
std::vector<double> text_key(std::span<const double> target, std::span<const double> var_p);

/// Unit-normalized target / (var_l + eps).
std::vector<double> fewshot_key(std::span<const double> target, std::span<const double> var_l);

/// query · Norm(var_p ⊙ target). Amplifies dimensions along which the class
/// prototypes spread out. The weight applies to the target only.
double text_reweighted_similarity(std::span<const double> query,
                                  std::span<const double> target,
                                  std::span<const double> var_p);
double text_reweighted_similarity(const Embedding& query, const Embedding& target,
                                  std::span<const double> var_p);

/// fewshot · Norm(test / (var_l + eps)). Suppresses dimensions with high
/// spread across the few-shot exemplars.
double fewshot_reweighted_similarity(std::span<const double> fewshot_sample,
                                     std::span<const double> test,
                                     std::span<const double> var_l);
double fewshot_reweighted_similarity(const Embedding& fewshot_sample, const Embedding& test,
                                     std::span<const double> var_l);

}  // namespace streamlp
