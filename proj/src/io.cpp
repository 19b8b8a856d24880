#include "streamlp/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include <json.hpp>

namespace streamlp::io {

namespace {

using json = nlohmann::json;

std::uint32_t load_u32(std::span<const std::uint8_t> bytes, std::size_t at) {
  return static_cast<std::uint32_t>(bytes[at]) |
         (static_cast<std::uint32_t>(bytes[at + 1]) << 8) |
         (static_cast<std::uint32_t>(bytes[at + 2]) << 16) |
         (static_cast<std::uint32_t>(bytes[at + 3]) << 24);
}

void store_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

}  // namespace

std::vector<std::uint8_t> encode(const EmbeddingFile& file) {
  if (file.payload.size() != static_cast<std::size_t>(file.count) * file.dim) {
    throw ConfigError("embedding payload size does not match count * dim");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + file.payload.size() * 4);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  store_u32(out, kVersion);
  store_u32(out, file.count);
  store_u32(out, file.dim);
  for (float f : file.payload) store_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

EmbeddingFile decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) {
    throw IngestError("truncated header: " + std::to_string(bytes.size()) + " bytes",
                      bytes.size());
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw IngestError("bad magic", 0);
  const auto version = load_u32(bytes, 4);
  if (version != kVersion) {
    throw IngestError("unsupported version " + std::to_string(version), 4);
  }
  EmbeddingFile file;
  file.count = load_u32(bytes, 8);
  file.dim = load_u32(bytes, 12);
  if (file.dim == 0) throw IngestError("dimension must be positive", 12);

  const std::uint64_t expected = kHeaderBytes + std::uint64_t{file.count} * file.dim * 4;
  if (bytes.size() != expected) {
    throw IngestError("payload length mismatch: expected " + std::to_string(expected) +
                          " bytes in total, found " + std::to_string(bytes.size()),
                      std::min<std::uint64_t>(bytes.size(), expected));
  }
  file.payload.resize(static_cast<std::size_t>(file.count) * file.dim);
  for (std::size_t i = 0; i < file.payload.size(); ++i) {
    const std::size_t at = kHeaderBytes + i * 4;
    file.payload[i] = std::bit_cast<float>(load_u32(bytes, at));
    if (!std::isfinite(file.payload[i])) throw IngestError("non-finite value", at);
  }
  return file;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ConfigError("write failed for " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("write failed for " + path.string());
}

EmbeddingFile read_embedding_file(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  try {
    return decode(bytes);
  } catch (const IngestError& e) {
    throw IngestError(path.string() + ": " + e.reason(), e.offset());
  }
}

void write_embedding_file(const std::filesystem::path& path, const EmbeddingFile& file) {
  write_bytes(path, encode(file));
}

std::vector<Embedding> to_embeddings(const EmbeddingFile& file, NodeKind kind,
                                     std::span<const std::size_t> class_ids) {
  if (kind == NodeKind::Test && !class_ids.empty()) {
    throw ConfigError("test embeddings take no class ids");
  }
  if (kind != NodeKind::Test && class_ids.size() != file.count) {
    throw IngestError("expected " + std::to_string(file.count) + " class ids for " +
                      to_string(kind) + " rows, got " + std::to_string(class_ids.size()));
  }
  std::vector<Embedding> out;
  out.reserve(file.count);
  for (std::size_t i = 0; i < file.count; ++i) {
    const std::uint64_t at = kHeaderBytes + std::uint64_t{i} * file.dim * 4;
    std::optional<std::size_t> id;
    if (kind != NodeKind::Test) id = class_ids[i];
    try {
      out.emplace_back(file.row(i), kind, id);
    } catch (const IngestError& e) {
      throw IngestError("row " + std::to_string(i) + ": " + e.what(), at);
    }
  }
  return out;
}

EmbeddingFile from_rows(const Matrix& rows) {
  EmbeddingFile file;
  file.count = static_cast<std::uint32_t>(rows.rows());
  file.dim = static_cast<std::uint32_t>(rows.cols());
  file.payload.reserve(rows.data().size());
  for (double v : rows.data()) file.payload.push_back(static_cast<float>(v));
  return file;
}

// ---------------------------------------------------------------------------
// Sidecar
// ---------------------------------------------------------------------------

void Sidecar::validate() const {
  if (class_names.empty()) throw IngestError("sidecar: class_names is empty");
  std::set<std::string> seen;
  for (const auto& name : class_names) {
    if (!seen.insert(name).second) throw IngestError("sidecar: duplicate class name '" + name + "'");
  }
  auto check = [&](const std::optional<std::vector<std::size_t>>& ids, const char* field) {
    if (!ids) return;
    for (std::size_t i = 0; i < ids->size(); ++i) {
      if ((*ids)[i] >= class_names.size()) {
        throw IngestError(std::string("sidecar: ") + field + "[" + std::to_string(i) +
                          "] out of range");
      }
    }
  };
  check(labels, "labels");
  check(fewshot_indices, "fewshot_indices");
}

std::string to_json(const Sidecar& sidecar) {
  json j;
  j["class_names"] = sidecar.class_names;
  if (sidecar.labels) j["labels"] = *sidecar.labels;
  if (sidecar.fewshot_indices) j["fewshot_indices"] = *sidecar.fewshot_indices;
  return j.dump(2) + "\n";
}

Sidecar parse_sidecar(const std::string& text) {
  Sidecar s;
  try {
    const auto j = json::parse(text);
    s.class_names = j.at("class_names").get<std::vector<std::string>>();
    if (j.contains("labels")) s.labels = j.at("labels").get<std::vector<std::size_t>>();
    if (j.contains("fewshot_indices")) {
      s.fewshot_indices = j.at("fewshot_indices").get<std::vector<std::size_t>>();
    }
  } catch (const json::exception& e) {
    throw IngestError(std::string("sidecar: ") + e.what());
  }
  s.validate();
  return s;
}

Sidecar read_sidecar(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  return parse_sidecar(std::string(bytes.begin(), bytes.end()));
}

void write_sidecar(const std::filesystem::path& path, const Sidecar& sidecar) {
  write_text(path, to_json(sidecar));
}

}  // namespace streamlp::io
