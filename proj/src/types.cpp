#include "streamlp/types.hpp"

#include <cmath>
#include <string>

#include "streamlp/linalg.hpp"

namespace streamlp {

IngestError::IngestError(const std::string& what, std::optional<std::uint64_t> offset)
    : Error(offset ? what + " (at byte offset " + std::to_string(*offset) + ")" : what),
      reason_(what),
      offset_(offset) {}

DimensionMismatch::DimensionMismatch(std::size_t expected, std::size_t got)
    : IngestError("embedding dimension mismatch: expected " + std::to_string(expected) +
                  ", got " + std::to_string(got)) {}

void Matrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) throw DimensionMismatch(cols_, values.size());
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

const char* to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Prototype:
      return "prototype";
    case NodeKind::FewShot:
      return "few-shot";
    case NodeKind::Test:
      return "test";
  }
  return "unknown";
}

namespace {

void check_class_id(NodeKind kind, const std::optional<std::size_t>& class_id) {
  if (kind == NodeKind::Test && class_id) {
    throw IngestError("test embeddings must not carry a class id");
  }
  if (kind != NodeKind::Test && !class_id) {
    throw IngestError(std::string(to_string(kind)) + " embeddings require a class id");
  }
}

}  // namespace

Embedding::Embedding(std::span<const double> values, NodeKind kind,
                     std::optional<std::size_t> class_id)
    : values_(values.begin(), values.end()), kind_(kind), class_id_(class_id) {
  check_class_id(kind, class_id);
  if (values_.empty()) throw IngestError("empty embedding");
  for (double v : values_) {
    if (!std::isfinite(v)) throw IngestError("non-finite embedding component");
  }
  if (!linalg::normalize_in_place(values_)) throw IngestError("zero embedding vector");
}

Embedding::Embedding(std::span<const float> values, NodeKind kind,
                     std::optional<std::size_t> class_id)
    : Embedding(std::vector<double>(values.begin(), values.end()), kind, class_id) {}

void require_dim(std::span<const Embedding> embeddings, std::size_t dim) {
  for (const auto& e : embeddings) {
    if (e.dim() != dim) throw DimensionMismatch(dim, e.dim());
  }
}

void HyperParams::validate() const {
  if (k_prototype == 0) throw ConfigError("k_prototype must be positive");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be positive");
  if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
  if (iters == 0) throw ConfigError("iters must be positive");
}

LabelState::LabelState(std::size_t classes, std::size_t fewshot_rows, std::size_t test_rows)
    : classes_(classes),
      fewshot_rows_(fewshot_rows),
      scores_(classes + fewshot_rows + test_rows, classes) {}

}  // namespace streamlp
