#include "streamlp/session.hpp"

#include <chrono>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "streamlp/linalg.hpp"
#include "streamlp/oracle.hpp"
#include "streamlp/reweight.hpp"

namespace streamlp {

namespace {

using json = nlohmann::json;

constexpr std::size_t kOracleNodeLimit = 500;

ContextStats session_stats(std::span<const Embedding> prototypes,
                           std::span<const Embedding> fewshot,
                           const ReweightSwitches& switches) {
  ContextStats stats = compute_prototype_stats(prototypes);
  if (!fewshot.empty() && switches.fewshot) {
    auto shot = compute_fewshot_stats(fewshot);
    stats.mu_l = std::move(shot.mu_l);
    stats.var_l = std::move(shot.var_l);
  }
  return stats;
}

std::vector<std::size_t> labels_of(std::span<const Embedding> anchors) {
  std::vector<std::size_t> out;
  out.reserve(anchors.size());
  for (const auto& a : anchors) out.push_back(a.class_id().value());
  return out;
}

void check_inputs(const StreamInputs& in) {
  in.sidecar.validate();
  if (in.prototypes.size() != in.sidecar.num_classes()) {
    throw IngestError("prototype count " + std::to_string(in.prototypes.size()) +
                      " does not match " + std::to_string(in.sidecar.num_classes()) +
                      " class names");
  }
  const std::size_t d = in.prototypes.front().dim();
  require_dim(in.tests, d);
  require_dim(in.fewshot, d);
  if (in.sidecar.labels && in.sidecar.labels->size() != in.tests.size()) {
    throw IngestError("sidecar has " + std::to_string(in.sidecar.labels->size()) +
                      " labels for " + std::to_string(in.tests.size()) + " test rows");
  }
}

std::vector<Embedding> prototype_embeddings(const io::EmbeddingFile& file) {
  std::vector<std::size_t> ids(file.count);
  for (std::size_t c = 0; c < ids.size(); ++c) ids[c] = c;
  return io::to_embeddings(file, NodeKind::Prototype, ids);
}

}  // namespace

StreamInputs load_inputs(const std::filesystem::path& prototypes,
                         const std::filesystem::path& tests,
                         const std::optional<std::filesystem::path>& fewshot,
                         const std::filesystem::path& sidecar) {
  StreamInputs in;
  in.sidecar = io::read_sidecar(sidecar);
  in.prototypes = prototype_embeddings(io::read_embedding_file(prototypes));
  in.tests = io::to_embeddings(io::read_embedding_file(tests), NodeKind::Test);
  if (fewshot) {
    if (!in.sidecar.fewshot_indices) {
      throw IngestError("few-shot file given but the sidecar has no fewshot_indices");
    }
    in.fewshot = io::to_embeddings(io::read_embedding_file(*fewshot), NodeKind::FewShot,
                                   *in.sidecar.fewshot_indices);
  }
  check_inputs(in);
  return in;
}

StreamInputs make_inputs(const SyntheticData& data, bool with_fewshot) {
  StreamInputs in;
  in.sidecar = data.sidecar;
  in.prototypes = prototype_embeddings(io::from_rows(data.prototypes));
  in.tests = io::to_embeddings(io::from_rows(data.tests), NodeKind::Test);
  if (with_fewshot && data.fewshot.rows() > 0) {
    in.fewshot = io::to_embeddings(io::from_rows(data.fewshot), NodeKind::FewShot,
                                   *data.sidecar.fewshot_indices);
  } else {
    in.sidecar.fewshot_indices.reset();
  }
  check_inputs(in);
  return in;
}

std::size_t nearest_prototype(const Embedding& test, std::span<const Embedding> prototypes) {
  std::size_t best = 0;
  double best_score = linalg::dot(test.values(), prototypes[0].values());
  for (std::size_t c = 1; c < prototypes.size(); ++c) {
    const double s = linalg::dot(test.values(), prototypes[c].values());
    if (s > best_score) {
      best_score = s;
      best = c;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Session
// ---------------------------------------------------------------------------

Session::Session(std::vector<Embedding> prototypes, std::vector<Embedding> fewshot,
                 const HyperParams& hyper, const ReweightSwitches& switches)
    : prototypes_(std::move(prototypes)),
      fewshot_(std::move(fewshot)),
      fewshot_labels_(labels_of(fewshot_)),
      hyper_(hyper),
      stats_(session_stats(prototypes_, fewshot_, switches)),
      graph_(prototypes_, fewshot_, stats_, EdgeCapacity::from(hyper), switches) {
  hyper_.validate();
  for (std::size_t c = 0; c < prototypes_.size(); ++c) {
    if (prototypes_[c].class_id() != c) {
      throw ConfigError("prototype " + std::to_string(c) + " must carry class id " +
                        std::to_string(c));
    }
  }
  labels_ = init_labels(prototypes_.size(), fewshot_labels_, 0);
  carry_ = Matrix(1, prototypes_.size());
}

std::size_t Session::observe(const Embedding& test) {
  const std::size_t index = graph_.expand(test);
  const NormalizedGraph normalized = finalize(graph_, hyper_.gamma);

  LabelState initial = init_labels(classes(), fewshot_labels_, index + 1);
  for (std::size_t i = 0; i <= index; ++i) {
    const auto src = carry_.row(i);
    std::copy(src.begin(), src.end(), initial.test_row(i).begin());
  }

  labels_ = run_propagation(normalized, initial, hyper_, observer_);
  const std::size_t prediction = predict(labels_, index, graph_.prototype_scores(index));
  carry_ = attenuate(labels_, hyper_.beta);
  return prediction;
}

std::vector<std::size_t> transductive_predictions(const StreamInputs& inputs,
                                                  const HyperParams& hyper,
                                                  const ReweightSwitches& switches) {
  const ContextStats stats = session_stats(inputs.prototypes, inputs.fewshot, switches);
  const auto graph =
      BoundedRowGraph::build_static(inputs.prototypes, inputs.fewshot, inputs.tests, stats,
                                    EdgeCapacity::from(hyper), switches);
  const auto normalized = finalize(graph, hyper.gamma);
  const auto initial =
      init_labels(inputs.prototypes.size(), labels_of(inputs.fewshot), inputs.tests.size());
  const auto final_labels = run_propagation(normalized, initial, hyper);
  std::vector<std::size_t> out(inputs.tests.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = predict(final_labels, i, graph.prototype_scores(i));
  }
  return out;
}

Accuracy score(std::span<const std::size_t> predictions, std::span<const std::size_t> labels) {
  if (predictions.size() != labels.size()) {
    throw ConfigError("prediction and label counts differ");
  }
  Accuracy acc;
  acc.total = labels.size();
  for (std::size_t i = 0; i < labels.size(); ++i) acc.correct += predictions[i] == labels[i];
  return acc;
}

RunReport run_stream(const StreamInputs& inputs, const HyperParams& hyper,
                     const EngineFlags& flags, const PropagationObserver& observer) {
  hyper.validate();
  check_inputs(inputs);

  RunReport report;
  report.hyper = hyper;
  report.flags = flags;
  report.classes = inputs.prototypes.size();
  report.num_tests = inputs.tests.size();
  report.num_fewshot = inputs.fewshot.size();

  const std::size_t total_nodes = report.classes + report.num_fewshot + report.num_tests;
  if (flags.oracle_check && total_nodes > kOracleNodeLimit) {
    throw ConfigError("--oracle-check supports at most 500 nodes, got " +
                      std::to_string(total_nodes));
  }

  Session session(inputs.prototypes, inputs.fewshot, hyper, flags.reweight);
  session.set_observer(observer);

  std::vector<Embedding> seen;
  std::string audit_failure;

  report.predictions.reserve(inputs.tests.size());
  report.arrival_seconds.reserve(inputs.tests.size());
  for (const auto& test : inputs.tests) {
    const auto start = std::chrono::steady_clock::now();
    report.predictions.push_back(session.observe(test));
    const auto stop = std::chrono::steady_clock::now();
    report.arrival_seconds.push_back(std::chrono::duration<double>(stop - start).count());
    report.baseline_predictions.push_back(nearest_prototype(test, inputs.prototypes));

    if (flags.oracle_check && audit_failure.empty()) {
      // The freshly inserted row must match an exhaustive rebuild.
      seen.push_back(test);
      const auto reference = BoundedRowGraph::build_static(
          inputs.prototypes, inputs.fewshot, seen, session.stats(), EdgeCapacity::from(hyper),
          flags.reweight);
      const std::size_t last = seen.size() - 1;
      if (!(reference.row(last) == session.graph().row(last))) {
        audit_failure = "new-row mismatch at arrival " + std::to_string(last);
      }
    }
  }

  if (flags.transductive || flags.oracle_check) {
    report.transductive = transductive_predictions(inputs, hyper, flags.reweight);
  }

  if (flags.oracle_check) {
    const ContextStats stats = session.stats();
    oracle::DenseProblem problem{inputs.prototypes, inputs.fewshot, inputs.tests, &stats,
                                 hyper, flags.reweight};
    const auto dense = oracle::dense_pipeline(problem);
    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < dense.size(); ++i) mismatches += dense[i] != (*report.transductive)[i];
    report.oracle_agrees = audit_failure.empty() && mismatches == 0;
    report.oracle_detail = !audit_failure.empty()
                               ? audit_failure
                               : std::to_string(mismatches) + " transductive mismatches vs dense oracle";
  }

  if (inputs.sidecar.labels) {
    const auto& labels = *inputs.sidecar.labels;
    report.online_accuracy = score(report.predictions, labels);
    report.baseline_accuracy = score(report.baseline_predictions, labels);
    if (report.transductive) report.transductive_accuracy = score(*report.transductive, labels);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

json accuracy_json(const std::optional<Accuracy>& acc) {
  if (!acc) return nullptr;
  return {{"correct", acc->correct}, {"total", acc->total}, {"accuracy", acc->value()}};
}

}  // namespace

std::string to_json(const RunReport& r) {
  json j;
  j["config"] = {
      {"k_prototype", r.hyper.k_prototype},
      {"k_test", r.hyper.k_test},
      {"k_fewshot", r.hyper.k_fewshot},
      {"gamma", r.hyper.gamma},
      {"beta", r.hyper.beta},
      {"alpha", r.hyper.alpha},
      {"iters", r.hyper.iters},
      {"text_reweight_tests", r.flags.reweight.text_tests},
      {"text_reweight_prototypes", r.flags.reweight.text_prototypes},
      {"fewshot_reweight", r.flags.reweight.fewshot},
      {"transductive", r.flags.transductive},
      {"oracle_check", r.flags.oracle_check},
  };
  j["classes"] = r.classes;
  j["num_tests"] = r.num_tests;
  j["num_fewshot"] = r.num_fewshot;
  j["predictions"] = r.predictions;
  j["baseline_predictions"] = r.baseline_predictions;
  j["transductive_predictions"] = r.transductive ? json(*r.transductive) : json(nullptr);
  j["online_accuracy"] = accuracy_json(r.online_accuracy);
  j["baseline_accuracy"] = accuracy_json(r.baseline_accuracy);
  j["transductive_accuracy"] = accuracy_json(r.transductive_accuracy);
  if (r.oracle_agrees) {
    j["oracle_check"] = {{"agrees", *r.oracle_agrees}, {"detail", r.oracle_detail.value_or("")}};
  }
  return j.dump(2) + "\n";
}

std::string timings_json(const RunReport& r) {
  double total = 0.0;
  for (double s : r.arrival_seconds) total += s;
  json j;
  j["total_seconds"] = total;
  j["arrival_seconds"] = r.arrival_seconds;
  return j.dump(2) + "\n";
}

std::string summary(const RunReport& r) {
  std::ostringstream out;
  out << fmt::format("classes={} tests={} few-shot={}\n", r.classes, r.num_tests, r.num_fewshot);
  auto line = [&](const char* name, const std::optional<Accuracy>& acc) {
    if (acc) {
      out << fmt::format("  {:<22} {:7.2f}%  ({}/{})\n", name, 100.0 * acc->value(),
                         acc->correct, acc->total);
    }
  };
  line("online accuracy", r.online_accuracy);
  line("nearest prototype", r.baseline_accuracy);
  line("transductive accuracy", r.transductive_accuracy);
  double total = 0.0;
  for (double s : r.arrival_seconds) total += s;
  if (!r.arrival_seconds.empty()) {
    out << fmt::format("  {:<22} {:.3f} s total, {:.3f} ms per arrival\n", "wall time", total,
                       1e3 * total / static_cast<double>(r.arrival_seconds.size()));
  }
  if (r.oracle_agrees) {
    out << fmt::format("  {:<22} {} ({})\n", "oracle check", *r.oracle_agrees ? "pass" : "FAIL",
                       r.oracle_detail.value_or(""));
  }
  return out.str();
}

}  // namespace streamlp
