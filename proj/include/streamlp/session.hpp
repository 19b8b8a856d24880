#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "streamlp/graph.hpp"
#include "streamlp/io.hpp"
#include "streamlp/propagate.hpp"
#include "streamlp/synthetic.hpp"
#include "streamlp/types.hpp"

namespace streamlp {

struct EngineFlags {
  ReweightSwitches reweight;
  bool transductive = false;  // also label the full test set from a static graph
  bool oracle_check = false;  // cross-check against the dense oracle (<= 500 nodes)

  bool operator==(const EngineFlags&) const = default;
};

/// Everything a run consumes, already normalized and validated.
struct StreamInputs {
  std::vector<Embedding> prototypes;  // prototype i belongs to class i
  std::vector<Embedding> fewshot;
  std::vector<Embedding> tests;
  io::Sidecar sidecar;
};

/// Reads and cross-checks the files of one run. Dimension and count mismatches
/// surface as IngestError.
StreamInputs load_inputs(const std::filesystem::path& prototypes,
                         const std::filesystem::path& tests,
                         const std::optional<std::filesystem::path>& fewshot,
                         const std::filesystem::path& sidecar);

/// Same checks as load_inputs, applied to in-memory synthetic data. The
/// few-shot rows are dropped when `with_fewshot` is false.
StreamInputs make_inputs(const SyntheticData& data, bool with_fewshot = true);

/// Nearest prototype by plain cosine, lowest class id on ties.
std::size_t nearest_prototype(const Embedding& test, std::span<const Embedding> prototypes);

/// Online inference over a stream of test embeddings. Each observe() call
/// expands the graph with the new sample, re-normalizes it, propagates labels
/// for `iters` steps with anchor resets, emits the sample's class, and keeps
/// attenuated pseudo-labels for the next arrival.
///
/// Single-threaded; one session per stream.
class Session {
 public:
  Session(std::vector<Embedding> prototypes, std::vector<Embedding> fewshot,
          const HyperParams& hyper, const ReweightSwitches& switches = {});

  std::size_t observe(const Embedding& test);

  /// Invoked after every propagation iteration of every arrival.
  void set_observer(PropagationObserver observer) { observer_ = std::move(observer); }

  std::size_t classes() const { return prototypes_.size(); }
  const ContextStats& stats() const { return stats_; }
  const BoundedRowGraph& graph() const { return graph_; }
  /// Labels after the most recent propagation.
  const LabelState& labels() const { return labels_; }
  const std::vector<Embedding>& prototypes() const { return prototypes_; }
  const std::vector<Embedding>& fewshot() const { return fewshot_; }
  const std::vector<std::size_t>& fewshot_labels() const { return fewshot_labels_; }

 private:
  std::vector<Embedding> prototypes_;
  std::vector<Embedding> fewshot_;
  std::vector<std::size_t> fewshot_labels_;
  HyperParams hyper_;
  ContextStats stats_;
  BoundedRowGraph graph_;
  Matrix carry_;  // attenuated test labels plus a zero row for the next arrival
  LabelState labels_;
  PropagationObserver observer_;
};

/// Labels every test node at once from a statically built graph, starting
/// from zero test labels.
std::vector<std::size_t> transductive_predictions(const StreamInputs& inputs,
                                                  const HyperParams& hyper,
                                                  const ReweightSwitches& switches);

struct Accuracy {
  std::size_t correct = 0;
  std::size_t total = 0;
  double value() const { return total == 0 ? 0.0 : static_cast<double>(correct) / total; }
  bool operator==(const Accuracy&) const = default;
};

Accuracy score(std::span<const std::size_t> predictions, std::span<const std::size_t> labels);

struct RunReport {
  HyperParams hyper;
  EngineFlags flags;
  std::size_t classes = 0;
  std::size_t num_tests = 0;
  std::size_t num_fewshot = 0;

  std::vector<std::size_t> predictions;           // emitted at arrival time
  std::vector<std::size_t> baseline_predictions;  // nearest prototype
  std::optional<std::vector<std::size_t>> transductive;

  std::optional<Accuracy> online_accuracy;
  std::optional<Accuracy> baseline_accuracy;
  std::optional<Accuracy> transductive_accuracy;

  std::optional<bool> oracle_agrees;
  std::optional<std::string> oracle_detail;

  std::vector<double> arrival_seconds;  // wall time per arrival
};

/// Runs the online protocol over `inputs.tests` in order.
RunReport run_stream(const StreamInputs& inputs, const HyperParams& hyper,
                     const EngineFlags& flags, const PropagationObserver& observer = {});

/// Report as JSON. Wall-clock timings are left out so that identical runs
/// serialize to identical bytes; see timings_json().
std::string to_json(const RunReport& report);
std::string timings_json(const RunReport& report);
std::string summary(const RunReport& report);

}  // namespace streamlp
