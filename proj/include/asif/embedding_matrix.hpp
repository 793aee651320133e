#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace asif {

/// Dense row-major float32 matrix holding one embedding per row.
///
/// When `normalized()` is true every row has unit L2 norm, so cosine
/// similarity against a row reduces to a dot product.
class EmbeddingMatrix {
 public:
  explicit EmbeddingMatrix(std::size_t dim = 1);
  EmbeddingMatrix(std::size_t rows, std::size_t dim);
  /// Takes ownership of `data`; its length must be rows * dim.
  EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> data,
                  bool normalized = false);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return rows_ == 0; }
  bool normalized() const noexcept { return normalized_; }

  std::span<const float> data() const noexcept { return data_; }
  std::span<const float> row(std::size_t i) const noexcept {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<float> mutable_row(std::size_t i) noexcept {
    normalized_ = false;
    return {data_.data() + i * dim_, dim_};
  }

  /// Rescales every row to unit norm (via canonicalize_row). Throws DegenerateRow (with the row
  /// index) on an all-zero or non-finite row; the matrix is left untouched.
  void normalize_rows();

  /// Appends a row. The normalized flag survives only if `values` is
  /// already unit-norm within tolerance.
  void append_row(std::span<const float> values);
  void erase_row(std::size_t i);

  bool operator==(const EmbeddingMatrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 1;
  std::vector<float> data_;
  bool normalized_ = false;
};

/// Tolerance on row norms for normalized matrices and sparse representations.
inline constexpr double kUnitNormTolerance = 1e-5;

/// Writes `in / ||in||` into `out`. The norm and division are done in
/// double and rounded once, so any exactly-representable positive multiple
/// of `in` maps to the same output. Returns false (leaving `out`
/// unspecified) when `in` is zero or not finite.
bool normalize_into(std::span<const float> in, std::span<float> out);

/// Anchor-row variant of normalize_into: a row already unit-norm within
/// 1e-6 is copied unchanged, which makes re-adding a stored row exact.
bool canonicalize_row(std::span<const float> in, std::span<float> out);

double l2_norm(std::span<const float> v);

}  // namespace asif
