#include "asif/relrep.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "asif/error.hpp"
#include "asif/kernels.hpp"

namespace asif {

void ProcessingConfig::validate() const {
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "k must be >= 1");
  if (!(p >= 1.0) || !std::isfinite(p)) {
    throw Error(ErrorKind::InvalidArgument, "p must be a finite real >= 1");
  }
}

std::vector<AnchorId> SparseRelRep::support() const {
  std::vector<AnchorId> ids;
  ids.reserve(entries.size());
  for (const auto& e : entries) ids.push_back(e.anchor_id);
  return ids;
}

namespace {

std::vector<float> canonical_query(std::span<const float> query, std::size_t dim) {
  if (query.size() != dim) {
    throw Error(ErrorKind::DimMismatch, "query has dimension " + std::to_string(query.size()) +
                                            ", anchors have " + std::to_string(dim));
  }
  std::vector<float> unit(query.size());
  if (!normalize_into(query, unit)) {
    throw Error(ErrorKind::DegenerateQuery, "query has zero or non-finite norm");
  }
  return unit;
}

}  // namespace

DenseSims raw_relrep(std::span<const float> query, const EmbeddingMatrix& side) {
  const auto unit = canonical_query(query, side.dim());
  const EmbeddingMatrix* rows = &side;
  EmbeddingMatrix normalized_copy;
  if (!side.normalized()) {
    normalized_copy = side;
    normalized_copy.normalize_rows();
    rows = &normalized_copy;
  }
  DenseSims sims;
  sims.values.resize(rows->rows());
  for (std::size_t i = 0; i < rows->rows(); ++i) {
    sims.values[i] = kernels::dot(unit.data(), rows->row(i).data(), rows->dim());
  }
  return sims;
}

std::vector<SparseEntry> sparsify_topk(const DenseSims& sims, std::size_t k,
                                       std::span<const AnchorId> ids) {
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "k must be >= 1");
  const std::size_t n = sims.values.size();
  if (!ids.empty() && ids.size() != n) {
    throw Error(ErrorKind::ShapeMismatch, "one anchor id per similarity required");
  }
  std::vector<kernels::Scored> all(n);
  for (std::size_t i = 0; i < n; ++i) {
    all[i] = {sims.values[i], ids.empty() ? i : ids[i], i};
  }
  const std::size_t keep = std::min(k, n);
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(),
                    kernels::ranks_before);
  std::vector<SparseEntry> out;
  out.reserve(keep);
  for (std::size_t r = 0; r < keep; ++r) {
    if (all[r].value != 0.0f) out.push_back({all[r].key, all[r].value});
  }
  std::sort(out.begin(), out.end(),
            [](const SparseEntry& a, const SparseEntry& b) { return a.anchor_id < b.anchor_id; });
  return out;
}

std::vector<SparseEntry> exponentiate(std::vector<SparseEntry> entries, double p,
                                      SignPolicy policy) {
  if (!(p >= 1.0)) throw Error(ErrorKind::InvalidArgument, "p must be >= 1");
  std::vector<SparseEntry> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    double v = e.value;
    if (policy == SignPolicy::ClampNegative && v <= 0.0) continue;
    const double powered = std::copysign(std::pow(std::abs(v), p), v);
    const auto f = static_cast<float>(powered);
    if (f != 0.0f) out.push_back({e.anchor_id, f});
  }
  return out;
}

SparseRelRep normalize_sparse(std::vector<SparseEntry> entries, Side mode,
                              StoreGeneration generation) {
  double sum = 0.0;
  for (const auto& e : entries) sum += static_cast<double>(e.value) * e.value;
  const double norm = std::sqrt(sum);
  if (!(norm > 0.0)) {
    throw Error(ErrorKind::EmptyRepresentation, "no anchor resembles this input");
  }
  SparseRelRep rep;
  rep.source_mode = mode;
  rep.generation = generation;
  rep.entries.reserve(entries.size());
  for (const auto& e : entries) {
    const auto v = static_cast<float>(e.value / norm);
    if (v != 0.0f) rep.entries.push_back({e.anchor_id, v});
  }
  return rep;
}

SparseRelRep process(std::span<const float> query, const AnchorStore& store, Side side,
                     const ProcessingConfig& cfg) {
  cfg.validate();
  auto sims = raw_relrep(query, store.side(side));
  auto top = sparsify_topk(sims, cfg.k, store.ids());
  return normalize_sparse(exponentiate(std::move(top), cfg.p, cfg.sign_policy), side,
                          store.generation());
}

SparseRelRep process_selection(const TopKResult& top, const AnchorStore& store, Side side,
                               const ProcessingConfig& cfg) {
  const auto ids = store.ids();
  std::vector<SparseEntry> entries;
  entries.reserve(top.indices.size());
  for (std::size_t r = 0; r < top.indices.size(); ++r) {
    if (top.values[r] != 0.0f) entries.push_back({ids[top.indices[r]], top.values[r]});
  }
  std::sort(entries.begin(), entries.end(),
            [](const SparseEntry& a, const SparseEntry& b) { return a.anchor_id < b.anchor_id; });
  return normalize_sparse(exponentiate(std::move(entries), cfg.p, cfg.sign_policy), side,
                          store.generation());
}

float sparse_cosine(const SparseRelRep& a, const SparseRelRep& b) {
  if (a.generation != b.generation) {
    throw Error(ErrorKind::StoreGenerationMismatch,
                "representations were built against different store generations");
  }
  double sum = 0.0;
  auto i = a.entries.begin();
  auto j = b.entries.begin();
  while (i != a.entries.end() && j != b.entries.end()) {
    if (i->anchor_id < j->anchor_id) {
      ++i;
    } else if (j->anchor_id < i->anchor_id) {
      ++j;
    } else {
      sum += static_cast<double>(i->value) * j->value;
      ++i;
      ++j;
    }
  }
  return static_cast<float>(sum);
}

}  // namespace asif
