#include "streamlp/ablate.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>


namespace streamlp {

namespace {

constexpr ReweightSwitches kNoReweight{false, false, false};

}  // namespace

std::vector<AblationConfig> component_configs() {
  const HyperParams defaults;
  std::vector<AblationConfig> configs;
  configs.push_back({"nearest prototype", defaults, kNoReweight, false, true});
  configs.push_back({"label propagation", defaults, kNoReweight, false, false});
  configs.push_back({"+ text reweight", defaults, {true, true, false}, false, false});
  configs.push_back({"+ few-shot", defaults, {true, true, false}, true, false});
  configs.push_back({"+ few-shot reweight", defaults, {true, true, true}, true, false});
  return configs;
}

std::vector<AblationConfig> knn_grid(std::span<const std::size_t> k_prototype,
                                     std::span<const std::size_t> k_test) {
  std::vector<AblationConfig> configs;
  for (std::size_t kp : k_prototype) {
    for (std::size_t ku : k_test) {
      HyperParams hyper;
      hyper.k_prototype = kp;
      hyper.k_test = ku;
      configs.push_back({fmt::format("kP={} kU={}", kp, ku), hyper, {}, false, false});
    }
  }
  return configs;
}

AblationTable ablate(std::span<const StreamInputs> datasets,
                     std::span<const AblationConfig> configs) {
  if (datasets.empty()) throw ConfigError("ablation needs at least one dataset");
  AblationTable table;
  for (const auto& config : configs) {
    AblationCell cell{config, {}, 0.0};
    for (const auto& data : datasets) {
      if (!data.sidecar.labels) throw ConfigError("ablation datasets need labels");
      if (config.baseline_only) {
        std::vector<std::size_t> predictions;
        for (const auto& t : data.tests) predictions.push_back(nearest_prototype(t, data.prototypes));
        cell.accuracies.push_back(score(predictions, *data.sidecar.labels).value());
        continue;
      }
      StreamInputs run = data;
      if (!config.use_fewshot) {
        run.fewshot.clear();
        run.sidecar.fewshot_indices.reset();
      }
      EngineFlags flags;
      flags.reweight = config.reweight;
      const auto report = run_stream(run, config.hyper, flags);
      cell.accuracies.push_back(report.online_accuracy->value());
    }
    cell.mean = std::accumulate(cell.accuracies.begin(), cell.accuracies.end(), 0.0) /
                static_cast<double>(cell.accuracies.size());
    table.cells.push_back(std::move(cell));
  }
  return table;
}

std::string format_table(const AblationTable& table) {
  std::ostringstream out;
  if (table.grid_rows > 0 && table.grid_rows * table.grid_cols == table.cells.size()) {
    out << fmt::format("{:>8}", "kP\\kU");
    for (std::size_t c = 0; c < table.grid_cols; ++c) {
      out << fmt::format(" {:>7}", table.cells[c].config.hyper.k_test);
    }
    out << "\n";
    for (std::size_t r = 0; r < table.grid_rows; ++r) {
      const auto& first = table.cells[r * table.grid_cols];
      out << fmt::format("{:>8}", first.config.hyper.k_prototype);
      for (std::size_t c = 0; c < table.grid_cols; ++c) {
        out << fmt::format(" {:>7.2f}", 100.0 * table.cells[r * table.grid_cols + c].mean);
      }
      out << "\n";
    }
    return out.str();
  }
  out << fmt::format("{:<24} {:>9}\n", "configuration", "accuracy");
  for (const auto& cell : table.cells) {
    out << fmt::format("{:<24} {:>8.2f}%\n", cell.config.name, 100.0 * cell.mean);
  }
  return out.str();
}

std::string to_json(const AblationTable& table) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& cell : table.cells) {
    j.push_back({{"name", cell.config.name},
                 {"k_prototype", cell.config.hyper.k_prototype},
                 {"k_test", cell.config.hyper.k_test},
                 {"text_reweight", cell.config.reweight.text_tests},
                 {"fewshot", cell.config.use_fewshot},
                 {"fewshot_reweight", cell.config.reweight.fewshot},
                 {"accuracies", cell.accuracies},
                 {"mean", cell.mean}});
  }
  return j.dump(2) + "\n";
}

std::vector<std::size_t> hard_first_order(const StreamInputs& inputs, double fraction,
                                          std::uint64_t seed) {
  if (!inputs.sidecar.labels) throw ConfigError("hard-first ordering needs labels");
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw ConfigError("fraction must lie in [0, 1]");
  const auto& labels = *inputs.sidecar.labels;
  std::vector<std::size_t> hard, rest;
  for (std::size_t i = 0; i < inputs.tests.size(); ++i) {
    const bool wrong = nearest_prototype(inputs.tests[i], inputs.prototypes) != labels[i];
    (wrong ? hard : rest).push_back(i);
  }
  const auto quota = static_cast<std::size_t>(fraction * static_cast<double>(inputs.tests.size()));
  const std::size_t lead = std::min(quota, hard.size());

  std::vector<std::size_t> order(hard.begin(), hard.begin() + static_cast<std::ptrdiff_t>(lead));
  std::vector<std::size_t> tail(hard.begin() + static_cast<std::ptrdiff_t>(lead), hard.end());
  tail.insert(tail.end(), rest.begin(), rest.end());
  std::mt19937_64 rng(seed);
  std::shuffle(tail.begin(), tail.end(), rng);
  order.insert(order.end(), tail.begin(), tail.end());
  return order;
}

StreamInputs reordered(const StreamInputs& inputs, std::span<const std::size_t> order) {
  if (order.size() != inputs.tests.size()) throw ConfigError("order size mismatch");
  StreamInputs out = inputs;
  out.tests.clear();
  for (std::size_t i : order) out.tests.push_back(inputs.tests.at(i));
  if (inputs.sidecar.labels) {
    std::vector<std::size_t> labels;
    for (std::size_t i : order) labels.push_back(inputs.sidecar.labels->at(i));
    out.sidecar.labels = std::move(labels);
  }
  return out;
}

}  // namespace streamlp
