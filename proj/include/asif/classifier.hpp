#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "asif/anchor_store.hpp"
#include "asif/relrep.hpp"
#include "asif/search.hpp"

namespace asif {

using ClassId = std::int64_t;

enum class Aggregation : std::uint8_t {
  MeanThenRenormalize,  ///< one averaged, renormalized rep per class
  MaxScore,             ///< keep every prompt rep; class score is the best prompt
};

/// One class and its prompts, given either as text (resolved through an
/// EmbeddingLookup) or as pre-embedded mode-b vectors.
struct PromptClass {
  ClassId class_id = 0;
  std::string name;
  std::vector<std::string> prompts;
  std::optional<EmbeddingMatrix> vectors;

  std::size_t prompt_count() const {
    return prompts.size() + (vectors ? vectors->rows() : 0);
  }
};

struct PromptSet {
  std::vector<PromptClass> classes;

  /// At least one class, unique ids, every class with a prompt.
  void validate() const;
  bool contains(ClassId id) const;
};

/// Text -> mode-b embedding table for text prompts.
class EmbeddingLookup {
 public:
  void insert(std::string text, std::vector<float> embedding);
  const std::vector<float>* find(std::string_view text) const;
  std::size_t size() const noexcept { return table_.size(); }

 private:
  std::unordered_map<std::string, std::vector<float>> table_;
};

struct CandidateClass {
  ClassId class_id = 0;
  std::string name;
  /// One rep under MeanThenRenormalize, one per prompt under MaxScore.
  std::vector<SparseRelRep> reps;
};

struct CandidateSet {
  std::vector<CandidateClass> classes;
  Aggregation aggregation = Aggregation::MeanThenRenormalize;
  StoreGeneration store_generation = 0;
};

struct TraceEntry {
  AnchorId anchor_id;
  float query_value;
  float candidate_value;
  float contribution;

  bool operator==(const TraceEntry&) const = default;
};

struct ClassScore {
  ClassId class_id;
  float score;

  bool operator==(const ClassScore&) const = default;
};

struct Prediction {
  /// Empty when the prediction is unknown.
  std::optional<ClassId> class_id;
  float score = 0.0f;
  /// Every class, score descending, ties by ascending class id.
  std::vector<ClassScore> ranked;
  /// Shared anchors of the query and the winning rep, contribution descending.
  std::vector<TraceEntry> trace;
  bool unknown = false;
  /// Support of the processed query rep (ascending ids).
  std::vector<AnchorId> query_support;

  bool operator==(const Prediction&) const = default;
};

/// Processes every prompt against mode b and aggregates per class.
/// Throws EmptyStore, or EmptyRepresentation for a prompt with no usable
/// similarity.
CandidateSet build_candidates(const PromptSet& prompts, const AnchorStore& store,
                              const ProcessingConfig& cfg,
                              Aggregation aggregation = Aggregation::MeanThenRenormalize,
                              const EmbeddingLookup* lookup = nullptr);

/// Processes the query against mode a and picks the closest class.
///
/// The prediction is unknown when the query rep is empty, the best score is
/// below `unknown_threshold`, or the query shares no anchor with the winner.
Prediction classify(std::span<const float> query, const AnchorStore& store,
                    const CandidateSet& candidates, const ProcessingConfig& cfg,
                    float unknown_threshold = 0.0f);

/// Row-wise identical to classify(), computed with the blocked parallel
/// top-k kernel.
std::vector<Prediction> classify_batch(const EmbeddingMatrix& queries, const AnchorStore& store,
                                       const CandidateSet& candidates,
                                       const ProcessingConfig& cfg,
                                       float unknown_threshold = 0.0f,
                                       std::size_t block_size = kDefaultBlockSize);

/// Human-readable attribution of a prediction to its anchors. Throws
/// UnknownAnchor when a traced anchor is no longer in the store.
std::string trace_report(const Prediction& pred, const AnchorStore& store);

/// Counts every candidate support once and every prediction's query support
/// once per prediction.
void record_workload_usage(UsageStats& stats, const CandidateSet& candidates,
                           std::span<const Prediction> predictions);

}  // namespace asif
