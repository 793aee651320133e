#include <algorithm>
#include <string>

#include "asif/error.hpp"
#include "asif/kernels.hpp"
#include "asif/search.hpp"

namespace asif {

TopKResult topk_bruteforce(std::span<const float> query, const EmbeddingMatrix& matrix,
                           std::size_t k, std::span<const AnchorId> tie_keys) {
  if (query.size() != matrix.dim()) {
    throw Error(ErrorKind::DimMismatch, "query has dimension " + std::to_string(query.size()) +
                                            ", matrix has " + std::to_string(matrix.dim()));
  }
  if (k == 0) throw Error(ErrorKind::InvalidArgument, "k must be >= 1");
  if (!tie_keys.empty() && tie_keys.size() != matrix.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "one tie key per row required");
  }
  const std::size_t n = matrix.rows();
  std::vector<kernels::Scored> all(n);
  for (std::size_t i = 0; i < n; ++i) {
    all[i] = {kernels::dot(query.data(), matrix.row(i).data(), matrix.dim()),
              tie_keys.empty() ? i : tie_keys[i], i};
  }
  std::sort(all.begin(), all.end(), kernels::ranks_before);
  TopKResult out;
  out.k_effective = std::min(k, n);
  out.indices.reserve(out.k_effective);
  out.values.reserve(out.k_effective);
  for (std::size_t r = 0; r < out.k_effective; ++r) {
    out.indices.push_back(all[r].index);
    out.values.push_back(all[r].value);
  }
  return out;
}

}  // namespace asif
