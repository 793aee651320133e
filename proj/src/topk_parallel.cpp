#include <algorithm>
#include <array>
#include <string>

#include "asif/error.hpp"
#include "asif/kernels.hpp"
#include "asif/search.hpp"

namespace asif {
namespace {

constexpr std::size_t kLanes = 16;
constexpr std::size_t kQueryChunk = 32;

// Rows regrouped in panels of kLanes: panel p stores element j of row
// p*kLanes + w at [p][j*kLanes + w]. Computing kLanes similarities at once
// vectorizes across rows while each row still accumulates sequentially in j.
class Panels {
 public:
  explicit Panels(const EmbeddingMatrix& m)
      : dim_(m.dim()), count_((m.rows() + kLanes - 1) / kLanes), data_(count_ * kLanes * dim_, 0.0f) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
      const float* src = m.row(i).data();
      float* dst = data_.data() + (i / kLanes) * kLanes * dim_ + (i % kLanes);
      for (std::size_t j = 0; j < dim_; ++j) dst[j * kLanes] = src[j];
    }
  }

  void dots(std::size_t panel, const float* query, float* out) const {
    const float* p = data_.data() + panel * kLanes * dim_;
    alignas(64) std::array<float, kLanes> acc{};
    for (std::size_t j = 0; j < dim_; ++j) {
      const float q = query[j];
      const float* col = p + j * kLanes;
#pragma omp simd
      for (std::size_t w = 0; w < kLanes; ++w) acc[w] += q * col[w];
    }
    std::copy(acc.begin(), acc.end(), out);
  }

 private:
  std::size_t dim_;
  std::size_t count_;
  std::vector<float> data_;
};

// Bounded partial selection: keeps a buffer of up to 2k candidates and
// compacts it with nth_element, after which anything not ranking before
// the k-th survivor can be rejected outright.
class Selector {
 public:
  void reset(std::size_t k) {
    k_ = k;
    buf_.clear();
    buf_.reserve(2 * k + 1);
    has_cutoff_ = false;
  }

  void push(float value, std::uint64_t key, std::size_t index) {
    const kernels::Scored s{value, key, index};
    if (has_cutoff_ && !kernels::ranks_before(s, cutoff_)) return;
    buf_.push_back(s);
    if (buf_.size() >= 2 * k_) compact();
  }

  TopKResult finish() {
    if (buf_.size() > k_) compact();
    std::sort(buf_.begin(), buf_.end(), kernels::ranks_before);
    TopKResult out;
    out.k_effective = buf_.size();
    out.indices.reserve(buf_.size());
    out.values.reserve(buf_.size());
    for (const auto& s : buf_) {
      out.indices.push_back(s.index);
      out.values.push_back(s.value);
    }
    return out;
  }

 private:
  void compact() {
    std::nth_element(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(k_ - 1), buf_.end(),
                     kernels::ranks_before);
    buf_.resize(k_);
    cutoff_ = buf_[k_ - 1];
    has_cutoff_ = true;
  }

  std::size_t k_ = 1;
  std::vector<kernels::Scored> buf_;
  kernels::Scored cutoff_{};
  bool has_cutoff_ = false;
};

}  // namespace

std::vector<TopKResult> topk_batched(const EmbeddingMatrix& queries,
                                     const EmbeddingMatrix& matrix, std::size_t k,
                                     std::size_t block_size,
                                     std::span<const AnchorId> tie_keys) {
  if (queries.dim() != matrix.dim()) {
    throw Error(ErrorKind::DimMismatch, "queries have dimension " + std::to_string(queries.dim()) +
                                            ", matrix has " + std::to_string(matrix.dim()));
  }
  if (k == 0) throw Error(ErrorKind::InvalidArgument, "k must be >= 1");
  if (block_size == 0) throw Error(ErrorKind::InvalidArgument, "block_size must be >= 1");
  if (!tie_keys.empty() && tie_keys.size() != matrix.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "one tie key per row required");
  }

  const std::size_t nq = queries.rows();
  const std::size_t n = matrix.rows();
  std::vector<TopKResult> results(nq);
  if (nq == 0) return results;

  const Panels panels(matrix);
  const std::size_t k_eff = std::min(k, n);
  const std::size_t chunks = (nq + kQueryChunk - 1) / kQueryChunk;
  const long long chunk_count = static_cast<long long>(chunks);

#pragma omp parallel
  {
    std::vector<Selector> selectors(kQueryChunk);
    alignas(64) std::array<float, kLanes> lane{};

#pragma omp for schedule(dynamic, 1)
    for (long long c = 0; c < chunk_count; ++c) {
      const std::size_t q0 = static_cast<std::size_t>(c) * kQueryChunk;
      const std::size_t q1 = std::min(nq, q0 + kQueryChunk);
      for (std::size_t q = q0; q < q1; ++q) selectors[q - q0].reset(std::max<std::size_t>(k_eff, 1));

      for (std::size_t start = 0; start < n; start += block_size) {
        const std::size_t end = std::min(n, start + block_size);
        const std::size_t first_panel = start / kLanes;
        const std::size_t last_panel = (end - 1) / kLanes;
        for (std::size_t p = first_panel; p <= last_panel; ++p) {
          const std::size_t row0 = p * kLanes;
          const std::size_t lo = std::max(start, row0);
          const std::size_t hi = std::min(end, row0 + kLanes);
          for (std::size_t q = q0; q < q1; ++q) {
            panels.dots(p, queries.row(q).data(), lane.data());
            Selector& sel = selectors[q - q0];
            for (std::size_t i = lo; i < hi; ++i) {
              sel.push(lane[i - row0], tie_keys.empty() ? i : tie_keys[i], i);
            }
          }
        }
      }
      for (std::size_t q = q0; q < q1; ++q) results[q] = selectors[q - q0].finish();
    }
  }
  return results;
}

}  // namespace asif
