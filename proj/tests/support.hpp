#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "streamlp/graph.hpp"
#include "streamlp/reweight.hpp"
#include "streamlp/types.hpp"

namespace streamlp::testing {

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> normal;
  std::vector<double> v(dim);
  for (double& x : v) x = normal(rng);
  return v;
}

inline std::vector<Embedding> random_embeddings(std::mt19937_64& rng, std::size_t count,
                                                std::size_t dim, NodeKind kind,
                                                std::size_t classes = 0) {
  std::vector<Embedding> out;
  for (std::size_t i = 0; i < count; ++i) {
    std::optional<std::size_t> id;
    if (kind == NodeKind::Prototype) id = i;
    if (kind == NodeKind::FewShot) id = i % classes;
    out.emplace_back(random_vector(rng, dim), kind, id);
  }
  return out;
}

/// Random node population with a finalized graph built by streaming expands.
struct RandomGraph {
  std::vector<Embedding> prototypes;
  std::vector<Embedding> fewshot;
  std::vector<Embedding> tests;
  ContextStats stats;
  HyperParams hyper;
};

inline RandomGraph random_population(std::mt19937_64& rng, std::size_t classes,
                                     std::size_t shots, std::size_t tests, std::size_t dim) {
  RandomGraph g;
  g.prototypes = random_embeddings(rng, classes, dim, NodeKind::Prototype);
  g.fewshot = random_embeddings(rng, classes * shots, dim, NodeKind::FewShot, classes);
  g.tests = random_embeddings(rng, tests, dim, NodeKind::Test);
  g.stats = compute_prototype_stats(g.prototypes);
  if (shots > 0 && classes * shots > 1) {
    auto l = compute_fewshot_stats(g.fewshot);
    g.stats.mu_l = l.mu_l;
    g.stats.var_l = l.var_l;
  }
  return g;
}

inline BoundedRowGraph streamed(const RandomGraph& g, ReweightSwitches switches = {}) {
  BoundedRowGraph graph(g.prototypes, g.fewshot, g.stats, EdgeCapacity::from(g.hyper),
                        switches);
  for (const auto& t : g.tests) graph.expand(t);
  return graph;
}

}  // namespace streamlp::testing
