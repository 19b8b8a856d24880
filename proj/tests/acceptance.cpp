// Acceptance gate: one PASS/FAIL line per criterion. Exits non-zero on any
// FAIL except the documented known gaps, which still print FAIL.
// Pass criterion names as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "streamlp/ablate.hpp"
#include "streamlp/bench.hpp"
#include "streamlp/graph.hpp"
#include "streamlp/linalg.hpp"
#include "streamlp/oracle.hpp"
#include "streamlp/propagate.hpp"
#include "streamlp/reweight.hpp"
#include "streamlp/session.hpp"
#include "streamlp/synthetic.hpp"
#include "support.hpp"

namespace {

using namespace streamlp;

struct Outcome {
  bool pass = false;
  std::string detail;
  bool documented = true;  // a FAIL here is the documented one, if any
};

struct Criterion {
  std::string name;
  double time_limit = 0.0;  // seconds; 0 for none
  std::function<Outcome()> run;
  std::string known_gap;  // non-empty when a FAIL is documented and expected
};

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
  return out;
}

std::vector<std::size_t> labels_of(std::span<const Embedding> fewshot) {
  std::vector<std::size_t> out;
  for (const auto& f : fewshot) out.push_back(*f.class_id());
  return out;
}

StreamInputs synthetic(std::size_t classes, std::size_t per_class, std::size_t dim, double noise,
                       std::size_t shots, std::uint64_t seed) {
  SyntheticConfig config;
  config.classes = classes;
  config.per_class = per_class;
  config.dim = dim;
  config.noise = noise;
  config.shots = shots;
  config.seed = seed;
  return make_inputs(generate_synthetic(config), shots > 0);
}

Outcome closed_form() {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t classes = 3 + trial % 3;
    const std::size_t shots = trial % 3;
    const std::size_t tests = 50 - classes * (1 + shots) - trial % 7;
    auto g = testing::random_population(rng, classes, shots, tests, 4 + trial % 5);
    const auto graph = finalize(testing::streamed(g), g.hyper.gamma);
    const auto y0 = init_labels(classes, labels_of(g.fewshot), tests);
    const auto iterated = run_propagation(graph, y0, PropagationOptions{0.9, 500, false});
    const auto closed =
        oracle::closed_form_lp(to_eigen(graph.to_dense()), to_eigen(y0.scores()), 0.9);
    worst = std::max(worst, (to_eigen(iterated.scores()) - closed).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-5, fmt::format("max abs error {:.2e} over 20 graphs", worst)};
}

Outcome dynamic_static() {
  const auto inputs = synthetic(10, 200, 64, 0.3, 4, 7);
  const ContextStats stats = [&] {
    ContextStats s = compute_prototype_stats(inputs.prototypes);
    const auto l = compute_fewshot_stats(inputs.fewshot);
    s.mu_l = l.mu_l;
    s.var_l = l.var_l;
    return s;
  }();
  const HyperParams hyper;
  const auto capacity = EdgeCapacity::from(hyper);
  BoundedRowGraph graph(inputs.prototypes, inputs.fewshot, stats, capacity);
  std::size_t mismatches = 0;
  for (std::size_t n = 0; n < inputs.tests.size(); ++n) {
    graph.expand(inputs.tests[n]);
    const auto reference = BoundedRowGraph::build_static(
        inputs.prototypes, inputs.fewshot, std::span(inputs.tests).first(n + 1), stats, capacity);
    if (!(graph.row(n) == reference.row(n))) ++mismatches;
  }
  return {mismatches == 0,
          fmt::format("{} arrivals, {} new-row mismatches", inputs.tests.size(), mismatches)};
}

Outcome knn_agreement() {
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<int> tri(-1, 1);
  const auto similarity = [](std::span<const double> q, std::span<const double> t) {
    return clamp_similarity(linalg::dot(q, t));
  };
  std::size_t mismatches = 0, tied_queries = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t dim = 2 + trial % 7;
    const std::size_t count = 1 + (trial * 13) % 60;
    // Coordinates in {-1, 0, 1} plus duplicated rows give many exact ties.
    std::vector<Embedding> cands;
    while (cands.size() < count) {
      std::vector<double> v(dim);
      for (double& x : v) x = tri(rng);
      if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) continue;
      cands.emplace_back(v, NodeKind::Test);
      if (trial % 2 && cands.size() < count) cands.push_back(cands.back());
    }
    std::vector<double> q(dim);
    do {
      for (double& x : q) x = tri(rng);
    } while (std::all_of(q.begin(), q.end(), [](double x) { return x == 0.0; }));
    const Embedding query(q, NodeKind::Test);
    Matrix keys(0, dim);
    std::vector<double> scores;
    for (const auto& c : cands) {
      keys.append_row(c.values());
      scores.push_back(similarity(query.values(), c.values()));
    }
    if (std::set<double>(scores.begin(), scores.end()).size() < scores.size()) ++tied_queries;
    const std::size_t k = 1 + trial % 10;
    const NodeId first = static_cast<NodeId>(trial % 50);
    if (knn_edges(query.values(), keys, first, k) !=
        oracle::exhaustive_knn(query.values(), cands, first, k, similarity)) {
      ++mismatches;
    }
  }
  return {mismatches == 0,
          fmt::format("1000 queries ({} with tied scores), {} mismatches", tied_queries,
                      mismatches)};
}

Outcome transductive() {
  std::size_t mismatches = 0, largest = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t classes = 3 + seed % 5;
    const std::size_t shots = seed % 2 ? 2 : 0;
    const std::size_t per_class = std::min<std::size_t>(40, 480 / classes - shots);
    const auto inputs = synthetic(classes, per_class, 32, 0.2 + 0.02 * seed, shots, seed);
    const HyperParams hyper;
    const ReweightSwitches switches;
    const auto engine = transductive_predictions(inputs, hyper, switches);
    ContextStats stats = compute_prototype_stats(inputs.prototypes);
    if (!inputs.fewshot.empty()) {
      const auto l = compute_fewshot_stats(inputs.fewshot);
      stats.mu_l = l.mu_l;
      stats.var_l = l.var_l;
    }
    const auto dense = oracle::dense_pipeline(
        {inputs.prototypes, inputs.fewshot, inputs.tests, &stats, hyper, switches});
    largest = std::max(largest,
                       inputs.prototypes.size() + inputs.fewshot.size() + inputs.tests.size());
    for (std::size_t i = 0; i < engine.size(); ++i) mismatches += engine[i] != dense[i];
  }
  return {mismatches == 0, fmt::format("10 instances up to {} nodes, {} differing predictions",
                                       largest, mismatches)};
}

Outcome normalization() {
  std::mt19937_64 rng(303);
  double asym = 0.0, min_entry = 0.0, radius = 0.0;
  std::size_t largest = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t classes = 2 + trial % 6;
    const std::size_t shots = trial % 3;
    const std::size_t tests = 10 + (trial * 37) % (200 - classes * (1 + shots) - 9);
    auto g = testing::random_population(rng, classes, shots, tests, 3 + trial % 10);
    g.hyper.k_test = 1 + trial % 10;
    g.hyper.gamma = trial % 4 == 0 ? 1.0 : 10.0;
    const auto m = to_eigen(finalize(testing::streamed(g), g.hyper.gamma).to_dense());
    largest = std::max<std::size_t>(largest, m.rows());
    asym = std::max(asym, (m - m.transpose()).cwiseAbs().maxCoeff());
    min_entry = std::min(min_entry, m.minCoeff());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
    radius = std::max(radius, solver.eigenvalues().cwiseAbs().maxCoeff());
  }
  const bool ok = asym <= 1e-12 && min_entry >= 0.0 && radius <= 1.0 + 1e-9;
  return {ok, fmt::format("50 graphs up to {} nodes: asymmetry {:.1e}, min entry {}, "
                          "spectral radius {:.12f}",
                          largest, asym, min_entry, radius)};
}

Outcome label_invariants() {
  std::size_t checks = 0, violations = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto inputs = synthetic(5 + seed, 40, 32, 0.3, seed, seed);
    run_stream(inputs, HyperParams{}, EngineFlags{}, [&](std::size_t, const LabelState& y) {
      ++checks;
      bool ok = true;
      for (std::size_t i = 0; i < y.classes(); ++i)
        for (std::size_t j = 0; j < y.classes(); ++j)
          ok = ok && y.prototype_row(i)[j] == (i == j ? 1.0 : 0.0);
      for (std::size_t i = 0; i < y.fewshot_rows(); ++i) {
        const auto row = y.fewshot_row(i);
        const std::size_t c = *inputs.fewshot[i].class_id();
        for (std::size_t j = 0; j < row.size(); ++j) ok = ok && row[j] == (j == c ? 1.0 : 0.0);
      }
      for (double v : y.scores().data()) ok = ok && v >= 0.0;
      violations += !ok;
    });
  }
  return {checks > 0 && violations == 0,
          fmt::format("{} mid-loop checks, {} violations", checks, violations)};
}

Outcome reweight_properties() {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  std::uniform_real_distribution<double> var(0.0, 2.0);
  double drift = 0.0, cosine_gap = 0.0, bound = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t dim = 2 + trial % 63;
    const Embedding q(testing::random_vector(rng, dim), NodeKind::Test);
    const Embedding t(testing::random_vector(rng, dim), NodeKind::Test);
    std::vector<double> w(dim);
    for (double& x : w) x = var(rng);
    const double c = scale(rng);
    std::vector<double> scaled_w(w), scaled_t(t.values().begin(), t.values().end());
    for (double& x : scaled_w) x *= c;
    for (double& x : scaled_t) x *= c;

    const double text = text_reweighted_similarity(q.values(), t.values(), w);
    const double few = fewshot_reweighted_similarity(q.values(), t.values(), w);
    drift = std::max({drift, std::abs(text - text_reweighted_similarity(q.values(), t.values(),
                                                                        scaled_w)),
                      std::abs(text - text_reweighted_similarity(q.values(), scaled_t, w)),
                      std::abs(few - fewshot_reweighted_similarity(q.values(), scaled_t, w))});

    const std::vector<double> constant(dim, 0.5 * c);
    const double cosine = linalg::dot(q.values(), t.values());
    cosine_gap = std::max(
        {cosine_gap, std::abs(text_reweighted_similarity(q.values(), t.values(), constant) - cosine),
         std::abs(fewshot_reweighted_similarity(q.values(), t.values(), constant) - cosine)});
    bound = std::max({bound, std::abs(text), std::abs(few)});
  }
  const bool ok = drift <= 1e-12 && cosine_gap <= 1e-9 && bound <= 1.0;
  return {ok, fmt::format("scale drift {:.1e}, cosine gap {:.1e}, max |w| {:.17g}", drift,
                          cosine_gap, bound)};
}

Outcome complexity() {
  BenchConfig config;  // N in {500, 1000, 2000, 4000}, d = 64
  const auto report = bench_construction(config);
  std::cout << format_table(report);
  const bool dynamic_ok = report.dynamic_exponent >= 1.7 && report.dynamic_exponent <= 2.3;
  const bool ok = dynamic_ok && report.static_exponent >= report.dynamic_exponent + 0.7;
  const auto& first = report.rows.front();
  const auto& last = report.rows.back();
  return {ok, fmt::format("dynamic exponent {:.3f}, static exponent {:.3f} (needs >= {:.3f}); "
                          "speedup {:.1f}x at N={} to {:.1f}x at N={}",
                          report.dynamic_exponent, report.static_exponent,
                          report.dynamic_exponent + 0.7,
                          first.static_seconds / first.dynamic_seconds, first.nodes,
                          last.static_seconds / last.dynamic_seconds, last.nodes),
          dynamic_ok};
}

std::vector<StreamInputs> ablation_datasets() {
  std::vector<StreamInputs> datasets;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    datasets.push_back(synthetic(10, 100, 64, 0.4, 4, seed));
  }
  return datasets;
}

double cell_mean(const AblationTable& table, const std::string& name) {
  for (const auto& cell : table.cells) {
    if (cell.config.name == name) return cell.mean;
  }
  throw std::runtime_error("missing ablation row " + name);
}

Outcome ablations() {
  const auto table = ablate(ablation_datasets(), component_configs());
  std::cout << format_table(table);
  const double plain = cell_mean(table, "label propagation");
  const double text = cell_mean(table, "+ text reweight");
  const double shots = cell_mean(table, "+ few-shot reweight");
  const bool ok = text >= plain && shots >= text;
  return {ok, fmt::format("text reweight {:.2f} vs off {:.2f}; 4-shot + reweight {:.2f} vs "
                          "zero-shot {:.2f}",
                          100 * text, 100 * plain, 100 * shots, 100 * text),
          shots >= text};
}

Outcome ordering() {
  double random_sum = 0.0, hard5 = 0.0, hard10 = 0.0;
  const auto datasets = ablation_datasets();
  for (std::size_t s = 0; s < datasets.size(); ++s) {
    StreamInputs zero_shot = datasets[s];
    zero_shot.fewshot.clear();
    zero_shot.sidecar.fewshot_indices.reset();
    std::vector<std::size_t> order(zero_shot.tests.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), std::mt19937_64(1000 + s));
    auto accuracy = [&](std::span<const std::size_t> o) {
      return run_stream(reordered(zero_shot, o), HyperParams{}, EngineFlags{})
          .online_accuracy->value();
    };
    random_sum += accuracy(order);
    hard5 += accuracy(hard_first_order(zero_shot, 0.05, 1000 + s));
    hard10 += accuracy(hard_first_order(zero_shot, 0.10, 1000 + s));
  }
  const double n = static_cast<double>(datasets.size());
  const double random = 100 * random_sum / n;
  const double first5 = 100 * hard5 / n;
  const double first10 = 100 * hard10 / n;
  return {std::abs(first5 - random) <= 1.0,
          fmt::format("random {:.2f}, hard-first 5% {:.2f} (10%: {:.2f})", random, first5,
                      first10)};
}

Outcome determinism() {
  std::size_t compared = 0, differing = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    EngineFlags flags;
    flags.transductive = true;
    flags.oracle_check = seed == 0;
    const auto a = run_stream(synthetic(6, 30, 32, 0.3, 2, seed), HyperParams{}, flags);
    const auto b = run_stream(synthetic(6, 30, 32, 0.3, 2, seed), HyperParams{}, flags);
    ++compared;
    differing += to_json(a) != to_json(b);
  }
  return {differing == 0,
          fmt::format("{} report pairs, {} differ byte-wise", compared, differing)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {"closed-form-oracle", 10.0, closed_form, {}},
      {"dynamic-static-equivalence", 60.0, dynamic_static, {}},
      {"knn-oracle", 0.0, knn_agreement, {}},
      {"transductive-oracle", 0.0, transductive, {}},
      {"normalization-invariants", 0.0, normalization, {}},
      {"label-invariants", 0.0, label_invariants, {}},
      {"reweight-properties", 0.0, reweight_properties, {}},
      {"complexity-benchmark", 300.0, complexity,
       "static exponent stays below dynamic + 0.7 over N = 500..4000 (README)"},
      {"directional-ablations", 0.0, ablations,
       "text re-weighting does not help on isotropic synthetic classes (README)"},
      {"ordering-robustness", 0.0, ordering, {}},
      {"determinism", 0.0, determinism, {}},
  };
  const std::set<std::string> only(argv + 1, argv + argc);

  int failures = 0, gaps = 0, passes = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.name)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what(), false};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_limit > 0.0 && seconds >= c.time_limit) {
      out.pass = false;
      out.documented = false;
      out.detail += fmt::format("; over the {:.0f} s limit", c.time_limit);
    }
    std::string note;
    if (out.pass) {
      ++passes;
    } else if (!c.known_gap.empty() && out.documented) {
      ++gaps;
      note = " (known gap: " + c.known_gap + ")";
    } else {
      ++failures;
    }
    std::cout << fmt::format("{} {}: {} [{:.1f} s]{}", out.pass ? "PASS" : "FAIL", c.name,
                             out.detail, seconds, note)
              << std::endl;
  }
  std::cout << fmt::format("{} passed, {} failed, {} known gaps\n", passes, failures, gaps);
  return failures == 0 ? 0 : 1;
}
