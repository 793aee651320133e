#include "asif/embedding_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "asif/error.hpp"

namespace asif {

EmbeddingMatrix::EmbeddingMatrix(std::size_t dim) : EmbeddingMatrix(0, dim) {}

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim)
    : EmbeddingMatrix(rows, dim, std::vector<float>(rows * dim, 0.0f)) {}

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim,
                                 std::vector<float> data, bool normalized)
    : rows_(rows), dim_(dim), data_(std::move(data)), normalized_(normalized) {
  if (dim_ == 0) {
    throw Error(ErrorKind::InvalidArgument, "embedding dimension must be >= 1");
  }
  if (data_.size() != rows_ * dim_) {
    throw Error(ErrorKind::ShapeMismatch,
                "data length " + std::to_string(data_.size()) + " != " +
                    std::to_string(rows_) + " x " + std::to_string(dim_));
  }
}

double l2_norm(std::span<const float> v) {
  double sum = 0.0;
  for (float x : v) sum += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(sum);
}

bool normalize_into(std::span<const float> in, std::span<float> out) {
  const double norm = l2_norm(in);
  if (!(norm > 0.0) || !std::isfinite(norm)) return false;
  for (std::size_t j = 0; j < in.size(); ++j) {
    out[j] = static_cast<float>(static_cast<double>(in[j]) / norm);
  }
  return true;
}

bool canonicalize_row(std::span<const float> in, std::span<float> out) {
  const double norm = l2_norm(in);
  if (std::isfinite(norm) && std::abs(norm - 1.0) <= 1e-6) {
    std::copy(in.begin(), in.end(), out.begin());
    return true;
  }
  return normalize_into(in, out);
}

void EmbeddingMatrix::normalize_rows() {
  std::vector<float> out(data_.size());
  for (std::size_t i = 0; i < rows_; ++i) {
    std::span<float> dst(out.data() + i * dim_, dim_);
    if (!canonicalize_row(row(i), dst)) {
      throw Error(ErrorKind::DegenerateRow,
                  "row " + std::to_string(i) + " has zero or non-finite norm", i);
    }
  }
  data_ = std::move(out);
  normalized_ = true;
}

void EmbeddingMatrix::append_row(std::span<const float> values) {
  if (values.size() != dim_) {
    throw Error(ErrorKind::DimMismatch, "row has dimension " +
                                            std::to_string(values.size()) +
                                            ", matrix has " + std::to_string(dim_));
  }
  if (normalized_ && std::abs(l2_norm(values) - 1.0) > kUnitNormTolerance) {
    normalized_ = false;
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

void EmbeddingMatrix::erase_row(std::size_t i) {
  if (i >= rows_) {
    throw Error(ErrorKind::InvalidArgument, "row " + std::to_string(i) + " out of range");
  }
  auto first = data_.begin() + static_cast<std::ptrdiff_t>(i * dim_);
  data_.erase(first, first + static_cast<std::ptrdiff_t>(dim_));
  --rows_;
}

}  // namespace asif
