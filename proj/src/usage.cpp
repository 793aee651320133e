#include <algorithm>
#include <fstream>

#include "asif/error.hpp"
#include "asif/search.hpp"

namespace asif {

UsageStats make_usage_stats(const AnchorStore& store) {
  UsageStats stats;
  stats.generation = store.generation();
  for (AnchorId id : store.ids()) stats.counts.emplace(id, 0);
  return stats;
}

void record_usage(UsageStats& stats, std::span<const AnchorId> support) {
  record_candidate_usage(stats, support);
  ++stats.total_queries;
}

void record_candidate_usage(UsageStats& stats, std::span<const AnchorId> support) {
  for (AnchorId id : support) ++stats.counts[id];
}

std::vector<AnchorId> prune_unused(AnchorStore& store, const UsageStats& stats,
                                   std::uint64_t min_count) {
  if (stats.generation != store.generation()) {
    throw Error(ErrorKind::StoreGenerationMismatch,
                "usage statistics were gathered against a different store generation");
  }
  std::vector<AnchorId> doomed;
  for (AnchorId id : store.ids()) {
    if (stats.count(id) < min_count) doomed.push_back(id);
  }
  std::sort(doomed.begin(), doomed.end());
  store.remove_pairs(doomed);
  return doomed;
}

void write_usage_csv(const UsageStats& stats, std::ostream& out) {
  std::vector<std::pair<AnchorId, std::uint64_t>> rows(stats.counts.begin(), stats.counts.end());
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  out << "anchor_id,count\n";
  for (const auto& [id, count] : rows) out << id << ',' << count << '\n';
}

void export_usage_csv(const UsageStats& stats, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  write_usage_csv(stats, out);
  if (!out) throw Error(ErrorKind::IoError, "write failed on " + path.string());
}

}  // namespace asif
