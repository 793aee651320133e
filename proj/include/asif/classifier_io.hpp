#pragma once

// JSON surfaces of the classifier: the prompt-set file and JSON-lines
// prediction output.

#include <filesystem>
#include <ostream>
#include <span>

#include "asif/classifier.hpp"
#include "json.hpp"

namespace asif {

/// Reads [{"class_id": int, "name": str, "prompts": [str]} | {..., "vectors_file": path}].
/// Relative vectors_file paths resolve against the JSON file's directory.
PromptSet load_prompt_set(const std::filesystem::path& path);
PromptSet parse_prompt_set(const nlohmann::json& doc, const std::filesystem::path& base_dir);

/// Embedding file plus a {"id", "text"} JSON-lines sidecar naming each row.
EmbeddingLookup load_embedding_lookup(const std::filesystem::path& embeddings,
                                      const std::filesystem::path& sidecar);

inline constexpr std::size_t kDefaultTopR = 5;

nlohmann::json prediction_to_json(const Prediction& pred, std::size_t top_r = kDefaultTopR,
                                  bool with_trace = false);
void write_predictions_jsonl(std::ostream& out, std::span<const Prediction> preds,
                             std::size_t top_r = kDefaultTopR, bool with_trace = false);

}  // namespace asif
