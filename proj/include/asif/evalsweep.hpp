#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include "asif/classifier.hpp"

namespace asif {

struct LabeledQueries {
  EmbeddingMatrix embeddings;
  std::vector<ClassId> labels;
};

/// Embedding file plus a {"row": int, "class_id": int} JSON-lines sidecar
/// covering every row exactly once.
LabeledQueries load_labeled_queries(const std::filesystem::path& embeddings,
                                    const std::filesystem::path& labels);

struct EvalOptions {
  float unknown_threshold = 0.0f;
  Aggregation aggregation = Aggregation::MeanThenRenormalize;
  std::size_t block_size = kDefaultBlockSize;
  const EmbeddingLookup* lookup = nullptr;
};

/// Fraction of queries whose predicted class equals the label. Unknown
/// predictions count as wrong.
double evaluate(const LabeledQueries& queries, const AnchorStore& store, const PromptSet& prompts,
                const ProcessingConfig& cfg, const EvalOptions& opts = {});

/// Accuracy from already computed predictions.
double accuracy(std::span<const Prediction> preds, std::span<const ClassId> labels);

struct SweepSpec {
  std::vector<std::size_t> k_values;
  std::vector<double> p_values;
  std::vector<std::size_t> size_prefixes;
  /// Reserved; the sweep is deterministic.
  std::vector<std::uint64_t> seeds;

  /// Nonempty lists, k >= 1, p >= 1, and every prefix within [1, n]
  /// (PrefixTooLarge otherwise).
  void validate(std::size_t store_size) const;
};

struct SweepRow {
  std::size_t k;
  double p;
  std::size_t prefix_size;
  double accuracy;

  bool operator==(const SweepRow&) const = default;
};

/// One row per (k, p, prefix) in grid order: k outermost, prefix innermost.
/// Each cell equals evaluate() with {k, p} on store.prefix(prefix).
std::vector<SweepRow> sweep(const LabeledQueries& queries, const AnchorStore& store,
                            const PromptSet& prompts, const SweepSpec& spec,
                            const ProcessingConfig& cfg_base, const EvalOptions& opts = {});

/// Header "k,p,prefix_size,accuracy"; p and accuracy with 6 decimals.
void write_sweep_csv(std::span<const SweepRow> table, std::ostream& out);
void export_csv(std::span<const SweepRow> table, const std::filesystem::path& path);
std::vector<SweepRow> parse_sweep_csv(std::istream& in);

}  // namespace asif
