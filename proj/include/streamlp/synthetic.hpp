#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include "streamlp/io.hpp"
#include "streamlp/types.hpp"

namespace streamlp {

class GeneratorError : public Error {
 public:
  using Error::Error;
};

struct SyntheticConfig {
  std::size_t classes = 3;
  std::size_t per_class = 20;  // test samples per class
  std::size_t dim = 64;
  double noise = 0.3;          // per-coordinate standard deviation
  std::size_t shots = 0;       // few-shot exemplars per class
  std::uint64_t seed = 0;
};

/// Class-structured embeddings on the unit sphere. Class means are drawn
/// uniformly and accepted only when every pair is at least 30 degrees apart.
/// Every prototype, few-shot and test row is normalize(mean + noise * g) with
/// g standard normal and drawn independently. Test samples are shuffled so
/// classes interleave in the stream.
struct SyntheticData {
  Matrix prototypes;  // one per class, in class order
  Matrix tests;
  Matrix fewshot;     // `shots` rows per class, grouped by class
  io::Sidecar sidecar;
};

/// Throws GeneratorError when the means cannot be placed within 10 * C draws,
/// ConfigError for C < 2 or dim < 2.
SyntheticData generate_synthetic(const SyntheticConfig& config);

struct SyntheticFiles {
  std::filesystem::path prototypes;
  std::filesystem::path tests;
  std::filesystem::path fewshot;  // empty path when shots == 0
  std::filesystem::path sidecar;
};

/// Writes prototypes.ecl, test.ecl, fewshot.ecl (if any) and sidecar.json.
SyntheticFiles write_synthetic(const SyntheticData& data, const std::filesystem::path& dir);

}  // namespace streamlp
