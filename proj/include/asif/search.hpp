#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <span>
#include <vector>

#include "asif/anchor_store.hpp"
#include "asif/embedding_matrix.hpp"

namespace asif {

/// Exact top-k rows of a matrix for one query: values descending, equal
/// values ordered by ascending tie key (the row index unless ids are given).
struct TopKResult {
  std::vector<std::size_t> indices;
  std::vector<float> values;
  std::size_t k_effective = 0;

  bool operator==(const TopKResult&) const = default;
};

/// Serial reference: every dot product, full sort, truncate. `tie_keys`,
/// when non-empty, holds one unique key per matrix row.
TopKResult topk_bruteforce(std::span<const float> query, const EmbeddingMatrix& matrix,
                           std::size_t k, std::span<const AnchorId> tie_keys = {});

/// Blocked, OpenMP-parallel equivalent of mapping topk_bruteforce over the
/// query rows. The anchor matrix is walked in blocks of `block_size` rows
/// and candidates are kept by partial selection; output is bit-identical to
/// the reference for every block size and thread count.
std::vector<TopKResult> topk_batched(const EmbeddingMatrix& queries,
                                     const EmbeddingMatrix& matrix, std::size_t k,
                                     std::size_t block_size,
                                     std::span<const AnchorId> tie_keys = {});

inline constexpr std::size_t kDefaultBlockSize = 4096;

/// How often each anchor took part in inference. Not synchronized; callers
/// sharing one instance across threads must serialize updates.
struct UsageStats {
  std::map<AnchorId, std::uint64_t> counts;
  std::uint64_t total_queries = 0;
  StoreGeneration generation = 0;

  std::uint64_t count(AnchorId id) const {
    auto it = counts.find(id);
    return it == counts.end() ? 0 : it->second;
  }
};

UsageStats make_usage_stats(const AnchorStore& store);

/// One query's support: each id +1, total_queries +1.
void record_usage(UsageStats& stats, std::span<const AnchorId> support);
/// A candidate representation's support: each id +1, total_queries unchanged.
void record_candidate_usage(UsageStats& stats, std::span<const AnchorId> support);

/// Removes every anchor used fewer than `min_count` times and returns their
/// ids in ascending order. Changes the store generation.
std::vector<AnchorId> prune_unused(AnchorStore& store, const UsageStats& stats,
                                   std::uint64_t min_count);

/// CSV "anchor_id,count", count descending then id ascending.
void write_usage_csv(const UsageStats& stats, std::ostream& out);
void export_usage_csv(const UsageStats& stats, const std::filesystem::path& path);

}  // namespace asif
