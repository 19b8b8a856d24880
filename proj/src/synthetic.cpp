#include "streamlp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "streamlp/linalg.hpp"

namespace streamlp {

namespace {

constexpr double kMinAngleDegrees = 30.0;

std::vector<double> gaussian(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim);
  for (double& x : v) x = normal(rng);
  return v;
}

std::vector<double> perturbed(std::mt19937_64& rng, std::span<const double> mean, double noise) {
  auto v = gaussian(rng, mean.size());
  for (std::size_t c = 0; c < v.size(); ++c) v[c] = mean[c] + noise * v[c];
  linalg::normalize_in_place(v);
  return v;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticConfig& config) {
  if (config.classes < 2) throw ConfigError("synthetic data needs at least two classes");
  if (config.dim < 2) throw ConfigError("synthetic data needs dim >= 2");
  if (!(config.noise >= 0.0)) throw ConfigError("noise must be non-negative");

  std::mt19937_64 rng(config.seed);
  const double max_cos = std::cos(kMinAngleDegrees * std::numbers::pi / 180.0);

  Matrix means(0, config.dim);
  const std::size_t budget = 10 * config.classes;
  for (std::size_t attempt = 0; means.rows() < config.classes; ++attempt) {
    if (attempt >= budget) {
      throw GeneratorError("could not place " + std::to_string(config.classes) +
                           " class means 30 degrees apart in dim " +
                           std::to_string(config.dim) + " within " + std::to_string(budget) +
                           " draws");
    }
    auto candidate = gaussian(rng, config.dim);
    if (!linalg::normalize_in_place(candidate)) continue;
    bool ok = true;
    for (std::size_t j = 0; j < means.rows() && ok; ++j) {
      ok = linalg::dot(candidate, means.row(j)) <= max_cos;
    }
    if (ok) means.append_row(candidate);
  }

  SyntheticData data;
  data.prototypes = Matrix(0, config.dim);
  data.tests = Matrix(0, config.dim);
  data.fewshot = Matrix(0, config.dim);

  for (std::size_t c = 0; c < config.classes; ++c) {
    data.prototypes.append_row(perturbed(rng, means.row(c), config.noise));
  }

  std::vector<std::size_t> fewshot_ids;
  for (std::size_t c = 0; c < config.classes; ++c) {
    for (std::size_t s = 0; s < config.shots; ++s) {
      data.fewshot.append_row(perturbed(rng, means.row(c), config.noise));
      fewshot_ids.push_back(c);
    }
  }

  std::vector<std::size_t> order(config.classes * config.per_class);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> labels;
  labels.reserve(order.size());
  for (std::size_t slot : order) {
    const std::size_t c = slot / config.per_class;
    data.tests.append_row(perturbed(rng, means.row(c), config.noise));
    labels.push_back(c);
  }

  for (std::size_t c = 0; c < config.classes; ++c) {
    data.sidecar.class_names.push_back("class_" + std::to_string(c));
  }
  data.sidecar.labels = std::move(labels);
  if (!fewshot_ids.empty()) data.sidecar.fewshot_indices = std::move(fewshot_ids);
  return data;
}

SyntheticFiles write_synthetic(const SyntheticData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  SyntheticFiles files{dir / "prototypes.ecl", dir / "test.ecl", {}, dir / "sidecar.json"};
  io::write_embedding_file(files.prototypes, io::from_rows(data.prototypes));
  io::write_embedding_file(files.tests, io::from_rows(data.tests));
  if (data.fewshot.rows() > 0) {
    files.fewshot = dir / "fewshot.ecl";
    io::write_embedding_file(files.fewshot, io::from_rows(data.fewshot));
  }
  io::write_sidecar(files.sidecar, data.sidecar);
  return files;
}

}  // namespace streamlp
