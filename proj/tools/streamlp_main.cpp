// Command-line front end: online inference over embedding files, synthetic
// data generation, the construction benchmark and ablation tables.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "streamlp/ablate.hpp"
#include "streamlp/bench.hpp"
#include "streamlp/io.hpp"
#include "streamlp/reweight.hpp"
#include "streamlp/session.hpp"
#include "streamlp/synthetic.hpp"

namespace {

enum ExitCode : int {
  kOk = 0,
  kIngestError = 2,
  kConfigError = 3,
  kOracleMismatch = 4,
};

struct RunArgs {
  std::string prototypes, test, fewshot, sidecar, report, timings;
  streamlp::HyperParams hyper;
  bool no_text_reweight = false;
  bool no_proto_reweight = false;
  bool no_fewshot_reweight = false;
  bool transductive = false;
  bool oracle_check = false;
  bool bench = false;
  std::vector<std::size_t> bench_sizes{500, 1000, 2000, 4000};
  std::size_t bench_dim = 64;
  bool bench_audit = false;
  std::uint64_t seed = 0;
};

struct GenerateArgs {
  streamlp::SyntheticConfig config;
  std::string out = "synthetic";
};

struct AblateArgs {
  std::size_t classes = 10;
  std::size_t per_class = 100;
  std::size_t dim = 64;
  double noise = 0.4;
  std::size_t shots = 4;
  std::size_t seeds = 5;
  std::uint64_t seed = 0;
  bool grid = false;
  std::vector<std::size_t> kp_values{1, 3, 5, 8, 10};
  std::vector<std::size_t> ku_values{1, 3, 5, 8, 10};
  std::string report;
};

void add_hyper_options(CLI::App& app, streamlp::HyperParams& h) {
  app.add_option("--kp", h.k_prototype, "Prototype neighbours per test node")
      ->capture_default_str();
  app.add_option("--ku", h.k_test, "Test neighbours per test node (0 disables)")
      ->capture_default_str();
  app.add_option("--kl", h.k_fewshot, "Few-shot neighbours per test node (0 disables)")
      ->capture_default_str();
  app.add_option("--gamma", h.gamma, "Power applied to symmetrized edge weights")
      ->capture_default_str();
  app.add_option("--beta", h.beta, "Carry-over factor for pseudo-labels")->capture_default_str();
  app.add_option("--alpha", h.alpha, "Propagation mixing factor")->capture_default_str();
  app.add_option("--iters", h.iters, "Propagation steps per arrival")->capture_default_str();
}

int run_bench(const RunArgs& args) {
  streamlp::BenchConfig config;
  config.node_counts = args.bench_sizes;
  config.dim = args.bench_dim;
  config.seed = args.seed;
  config.audit = args.bench_audit;
  const auto report = streamlp::bench_construction(config);
  std::cout << streamlp::format_table(report);
  if (!args.report.empty()) streamlp::io::write_text(args.report, streamlp::to_json(report));
  for (const auto& row : report.rows) {
    if (row.audit_mismatches > 0) return kOracleMismatch;
  }
  return kOk;
}

int run_inference(const RunArgs& args) {
  if (args.prototypes.empty() || args.test.empty() || args.sidecar.empty()) {
    throw streamlp::ConfigError("--prototypes, --test and --sidecar are required");
  }
  std::optional<std::filesystem::path> fewshot;
  if (!args.fewshot.empty()) fewshot = args.fewshot;
  const auto inputs = streamlp::load_inputs(args.prototypes, args.test, fewshot, args.sidecar);

  streamlp::EngineFlags flags;
  flags.reweight.text_tests = !args.no_text_reweight;
  flags.reweight.text_prototypes = !args.no_text_reweight && !args.no_proto_reweight;
  flags.reweight.fewshot = !args.no_fewshot_reweight;
  flags.transductive = args.transductive;
  flags.oracle_check = args.oracle_check;

  const auto report = streamlp::run_stream(inputs, args.hyper, flags);
  std::cout << streamlp::summary(report);
  if (!args.report.empty()) streamlp::io::write_text(args.report, streamlp::to_json(report));
  if (!args.timings.empty()) streamlp::io::write_text(args.timings, streamlp::timings_json(report));
  if (report.oracle_agrees && !*report.oracle_agrees) return kOracleMismatch;
  return kOk;
}

int run_generate(const GenerateArgs& args) {
  const auto data = streamlp::generate_synthetic(args.config);
  const auto files = streamlp::write_synthetic(data, args.out);
  std::cout << fmt::format("wrote {} prototypes, {} test rows, {} few-shot rows to {}\n",
                           data.prototypes.rows(), data.tests.rows(), data.fewshot.rows(),
                           args.out);
  std::cout << "  " << files.prototypes.string() << "\n  " << files.tests.string() << "\n";
  if (!files.fewshot.empty()) std::cout << "  " << files.fewshot.string() << "\n";
  std::cout << "  " << files.sidecar.string() << "\n";
  return kOk;
}

int run_ablate(const AblateArgs& args) {
  std::vector<streamlp::StreamInputs> datasets;
  for (std::size_t s = 0; s < args.seeds; ++s) {
    streamlp::SyntheticConfig config;
    config.classes = args.classes;
    config.per_class = args.per_class;
    config.dim = args.dim;
    config.noise = args.noise;
    config.shots = args.shots;
    config.seed = args.seed + s;
    datasets.push_back(streamlp::make_inputs(streamlp::generate_synthetic(config)));
  }
  streamlp::AblationTable table;
  if (args.grid) {
    const auto configs = streamlp::knn_grid(args.kp_values, args.ku_values);
    table = streamlp::ablate(datasets, configs);
    table.grid_rows = args.kp_values.size();
    table.grid_cols = args.ku_values.size();
  } else {
    table = streamlp::ablate(datasets, streamlp::component_configs());
  }
  std::cout << streamlp::format_table(table);
  if (!args.report.empty()) streamlp::io::write_text(args.report, streamlp::to_json(table));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming label propagation over embedding vectors"};
  app.require_subcommand(0, 1);

  RunArgs run;
  app.add_option("--prototypes", run.prototypes, "Prototype embedding file (one row per class)");
  app.add_option("--test", run.test, "Test embedding file, in stream order");
  app.add_option("--fewshot", run.fewshot, "Optional few-shot embedding file");
  app.add_option("--sidecar", run.sidecar, "Label sidecar (JSON)");
  app.add_option("--report", run.report, "Write the JSON report here");
  app.add_option("--timings", run.timings, "Write per-arrival wall times here (JSON)");
  add_hyper_options(app, run.hyper);
  app.add_flag("--no-text-reweight", run.no_text_reweight,
               "Plain cosine for test-test and test-prototype edges");
  app.add_flag("--no-proto-reweight", run.no_proto_reweight,
               "Plain cosine for test-prototype edges only");
  app.add_flag("--no-fewshot-reweight", run.no_fewshot_reweight,
               "Plain cosine for test-few-shot edges");
  app.add_flag("--transductive", run.transductive,
               "Also label the whole test set from a statically built graph");
  app.add_flag("--oracle-check", run.oracle_check,
               "Cross-check against the dense reference pipeline (<= 500 nodes)");
  app.add_flag("--bench", run.bench, "Run the graph construction benchmark");
  app.add_option("--bench-sizes", run.bench_sizes, "Stream lengths for --bench")
      ->delimiter(',');
  app.add_option("--bench-dim", run.bench_dim, "Embedding dimension for --bench");
  app.add_flag("--bench-audit", run.bench_audit,
               "Check dynamic against static rows at every arrival during --bench");
  app.add_option("--seed", run.seed, "Seed for --bench data");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write a synthetic dataset");
  generate->add_option("--out", gen.out, "Output directory")->capture_default_str();
  generate->add_option("--classes", gen.config.classes)->capture_default_str();
  generate->add_option("--per-class", gen.config.per_class)->capture_default_str();
  generate->add_option("--dim", gen.config.dim)->capture_default_str();
  generate->add_option("--noise", gen.config.noise)->capture_default_str();
  generate->add_option("--shots", gen.config.shots)->capture_default_str();
  generate->add_option("--seed", gen.config.seed)->capture_default_str();

  AblateArgs abl;
  auto* ablate = app.add_subcommand("ablate", "Component or k-sweep tables on synthetic data");
  ablate->add_option("--classes", abl.classes)->capture_default_str();
  ablate->add_option("--per-class", abl.per_class)->capture_default_str();
  ablate->add_option("--dim", abl.dim)->capture_default_str();
  ablate->add_option("--noise", abl.noise)->capture_default_str();
  ablate->add_option("--shots", abl.shots)->capture_default_str();
  ablate->add_option("--seeds", abl.seeds, "Number of datasets to average")->capture_default_str();
  ablate->add_option("--seed", abl.seed, "First seed")->capture_default_str();
  ablate->add_flag("--grid", abl.grid, "k_prototype x k_test sweep instead of components");
  ablate->add_option("--kp-values", abl.kp_values)->delimiter(',');
  ablate->add_option("--ku-values", abl.ku_values)->delimiter(',');
  ablate->add_option("--report", abl.report, "Write the table as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (generate->parsed()) return run_generate(gen);
    if (ablate->parsed()) return run_ablate(abl);
    if (run.bench) return run_bench(run);
    return run_inference(run);
  } catch (const streamlp::IngestError& e) {
    std::cerr << "ingest error: " << e.what() << "\n";
    return kIngestError;
  } catch (const streamlp::Error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
}
