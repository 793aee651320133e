#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "asif/anchor_store.hpp"
#include "asif/embedding_matrix.hpp"
#include "asif/search.hpp"

namespace asif {

/// How exponentiation treats negative similarities.
enum class SignPolicy : std::uint8_t {
  SignedPower,    ///< sign(v) * |v|^p; strictly monotone for every p
  ClampNegative,  ///< max(v, 0)^p; zeros are dropped
};

enum class Similarity : std::uint8_t { Cosine };

struct ProcessingConfig {
  std::size_t k = 800;
  double p = 8.0;
  SignPolicy sign_policy = SignPolicy::SignedPower;
  Similarity similarity = Similarity::Cosine;

  /// Throws InvalidArgument unless k >= 1 and p >= 1.
  void validate() const;
};

struct SparseEntry {
  AnchorId anchor_id;
  float value;

  bool operator==(const SparseEntry&) const = default;
};

/// A processed relative representation: at most k nonzero entries, sorted
/// by ascending anchor id, unit L2 norm.
struct SparseRelRep {
  std::vector<SparseEntry> entries;
  Side source_mode = Side::A;
  StoreGeneration generation = 0;

  std::vector<AnchorId> support() const;
  bool operator==(const SparseRelRep&) const = default;
};

/// Cosine similarity of a query against every row, in row order.
struct DenseSims {
  std::vector<float> values;
};

/// Throws DimMismatch, or DegenerateQuery for a zero or non-finite query.
DenseSims raw_relrep(std::span<const float> query, const EmbeddingMatrix& side);

/// Keeps the k largest values. Ties go to the smaller anchor id (`ids[i]`,
/// or i itself when `ids` is empty). Exact zeros are dropped. Output is
/// sorted by anchor id.
std::vector<SparseEntry> sparsify_topk(const DenseSims& sims, std::size_t k,
                                       std::span<const AnchorId> ids = {});

std::vector<SparseEntry> exponentiate(std::vector<SparseEntry> entries, double p,
                                      SignPolicy policy);

/// Throws EmptyRepresentation when nothing nonzero remains.
SparseRelRep normalize_sparse(std::vector<SparseEntry> entries, Side mode = Side::A,
                              StoreGeneration generation = 0);

/// sparsify -> exponentiate -> normalize against one side of the store.
SparseRelRep process(std::span<const float> query, const AnchorStore& store, Side side,
                     const ProcessingConfig& cfg);

/// Same pipeline starting from an already computed top-k selection whose
/// indices are row positions in `store`. Used by the batched path.
SparseRelRep process_selection(const TopKResult& top, const AnchorStore& store, Side side,
                               const ProcessingConfig& cfg);

/// Dot product over the shared support (both inputs are unit norm).
/// Throws StoreGenerationMismatch if the reps come from different store
/// generations.
float sparse_cosine(const SparseRelRep& a, const SparseRelRep& b);

}  // namespace asif
