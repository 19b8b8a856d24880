#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace streamlp {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data. `offset` is the byte offset into the offending file
/// when the failure is tied to one, otherwise std::nullopt.
class IngestError : public Error {
 public:
  explicit IngestError(const std::string& what,
                       std::optional<std::uint64_t> offset = std::nullopt);
  std::optional<std::uint64_t> offset() const { return offset_; }
  /// The message without the offset suffix.
  const std::string& reason() const { return reason_; }

 private:
  std::string reason_;
  std::optional<std::uint64_t> offset_;
};

/// Embeddings of different dimension met in one session.
class DimensionMismatch : public IngestError {
 public:
  DimensionMismatch(std::size_t expected, std::size_t got);
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Fewer samples than needed for a per-dimension variance.
class StatsDegenerate : public Error {
 public:
  using Error::Error;
};

class InvalidLabel : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Dense row-major matrix
// ---------------------------------------------------------------------------

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  void append_row(std::span<const double> values);
  void reserve_rows(std::size_t rows) { data_.reserve(rows * cols_); }
  void resize_rows(std::size_t rows) {
    rows_ = rows;
    data_.resize(rows * cols_, 0.0);
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Embeddings
// ---------------------------------------------------------------------------

enum class NodeKind : std::uint8_t { Prototype, FewShot, Test };

const char* to_string(NodeKind kind);

/// A unit-length feature vector tagged with the role it plays in the graph.
/// Anchors (prototypes, few-shot exemplars) carry a class id; test samples
/// never do.
class Embedding {
 public:
  /// Normalizes `values` to unit L2 length. Throws IngestError for an empty,
  /// non-finite or zero vector, and for a class id that does not match `kind`.
  Embedding(std::span<const double> values, NodeKind kind,
            std::optional<std::size_t> class_id = std::nullopt);
  Embedding(std::span<const float> values, NodeKind kind,
            std::optional<std::size_t> class_id = std::nullopt);

  std::span<const double> values() const { return values_; }
  std::size_t dim() const { return values_.size(); }
  NodeKind kind() const { return kind_; }
  std::optional<std::size_t> class_id() const { return class_id_; }

 private:
  std::vector<double> values_;
  NodeKind kind_;
  std::optional<std::size_t> class_id_;
};

/// Checks that every embedding has dimension `dim`.
void require_dim(std::span<const Embedding> embeddings, std::size_t dim);

// ---------------------------------------------------------------------------
// Hyperparameters
// ---------------------------------------------------------------------------

struct HyperParams {
  std::size_t k_prototype = 3;  // test -> prototype neighbours
  std::size_t k_test = 8;       // test -> test neighbours
  std::size_t k_fewshot = 8;    // test -> few-shot neighbours
  double gamma = 10.0;          // elementwise power applied after symmetrizing
  double beta = 0.2;            // pseudo-label carry-over factor
  double alpha = 1.0;           // propagation mixing
  std::size_t iters = 3;        // propagation steps per arrival

  /// Throws ConfigError when a field is out of range. k_test and k_fewshot
  /// may be zero, which removes that edge type.
  void validate() const;

  bool operator==(const HyperParams&) const = default;
};

// ---------------------------------------------------------------------------
// Label matrix
// ---------------------------------------------------------------------------

/// Label scores for every node, stacked as [prototypes; few-shot; tests].
/// There is exactly one prototype per class, so the prototype block is C x C.
class LabelState {
 public:
  LabelState() = default;
  LabelState(std::size_t classes, std::size_t fewshot_rows, std::size_t test_rows);

  std::size_t classes() const { return classes_; }
  std::size_t prototype_rows() const { return classes_; }
  std::size_t fewshot_rows() const { return fewshot_rows_; }
  std::size_t test_rows() const { return scores_.rows() - classes_ - fewshot_rows_; }
  std::size_t rows() const { return scores_.rows(); }

  std::size_t fewshot_offset() const { return classes_; }
  std::size_t test_offset() const { return classes_ + fewshot_rows_; }

  std::span<double> prototype_row(std::size_t i) { return scores_.row(i); }
  std::span<const double> prototype_row(std::size_t i) const { return scores_.row(i); }
  std::span<double> fewshot_row(std::size_t i) { return scores_.row(fewshot_offset() + i); }
  std::span<const double> fewshot_row(std::size_t i) const {
    return scores_.row(fewshot_offset() + i);
  }
  std::span<double> test_row(std::size_t i) { return scores_.row(test_offset() + i); }
  std::span<const double> test_row(std::size_t i) const {
    return scores_.row(test_offset() + i);
  }

  Matrix& scores() { return scores_; }
  const Matrix& scores() const { return scores_; }

  bool operator==(const LabelState&) const = default;

 private:
  std::size_t classes_ = 0;
  std::size_t fewshot_rows_ = 0;
  Matrix scores_;
};

// ---------------------------------------------------------------------------
// Context statistics
// ---------------------------------------------------------------------------

/// Per-dimension mean and population variance of the prototype set, and of the
/// few-shot set when one exists. The means are kept for diagnostics; only the
/// variances feed edge re-weighting.
struct ContextStats {
  std::vector<double> mu_p;
  std::vector<double> var_p;
  std::optional<std::vector<double>> mu_l;
  std::optional<std::vector<double>> var_l;
};

}  // namespace streamlp
