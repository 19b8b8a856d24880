#pragma once

// Binary embedding files and the JSON label sidecar.
//
// Embedding file layout (all little-endian):
//   offset 0   char[4]  magic "ECLP"
//   offset 4   u32      version (1)
//   offset 8   u32      row count
//   offset 12  u32      dimension
//   offset 16  f32[count * dim], row-major

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "streamlp/types.hpp"

namespace streamlp::io {

inline constexpr char kMagic[4] = {'E', 'C', 'L', 'P'};
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::size_t kHeaderBytes = 16;

/// Raw rows as stored on disk; no normalization applied.
struct EmbeddingFile {
  std::uint32_t count = 0;
  std::uint32_t dim = 0;
  std::vector<float> payload;  // count * dim

  std::span<const float> row(std::size_t i) const { return {payload.data() + i * dim, dim}; }
  bool operator==(const EmbeddingFile&) const = default;
};

std::vector<std::uint8_t> encode(const EmbeddingFile& file);

/// Throws IngestError carrying the byte offset of the first violation.
EmbeddingFile decode(std::span<const std::uint8_t> bytes);

EmbeddingFile read_embedding_file(const std::filesystem::path& path);
void write_embedding_file(const std::filesystem::path& path, const EmbeddingFile& file);

/// Normalizes every row into an Embedding. Zero or non-finite rows throw
/// IngestError at the row's byte offset. `class_ids` must be empty for tests
/// and give one id per row otherwise.
std::vector<Embedding> to_embeddings(const EmbeddingFile& file, NodeKind kind,
                                     std::span<const std::size_t> class_ids = {});

EmbeddingFile from_rows(const Matrix& rows);

struct Sidecar {
  std::vector<std::string> class_names;
  std::optional<std::vector<std::size_t>> labels;           // ground truth for tests
  std::optional<std::vector<std::size_t>> fewshot_indices;  // class of each few-shot row

  std::size_t num_classes() const { return class_names.size(); }
  /// Names non-empty and unique; every label and few-shot class id < C.
  void validate() const;

  bool operator==(const Sidecar&) const = default;
};

std::string to_json(const Sidecar& sidecar);
Sidecar parse_sidecar(const std::string& text);
Sidecar read_sidecar(const std::filesystem::path& path);
void write_sidecar(const std::filesystem::path& path, const Sidecar& sidecar);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace streamlp::io
