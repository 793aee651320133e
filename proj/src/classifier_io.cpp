#include "asif/classifier_io.hpp"

#include <fstream>

#include "asif/embedding_format.hpp"
#include "asif/error.hpp"

namespace asif {

PromptSet parse_prompt_set(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_array()) throw Error(ErrorKind::FormatError, "prompt set must be a JSON array");
  PromptSet set;
  try {
    for (const auto& item : doc) {
      PromptClass c;
      c.class_id = item.at("class_id").get<ClassId>();
      c.name = item.value("name", std::string{});
      if (item.contains("prompts")) c.prompts = item.at("prompts").get<std::vector<std::string>>();
      if (item.contains("vectors_file")) {
        std::filesystem::path p = item.at("vectors_file").get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        c.vectors = read_embedding_file(p);
      }
      set.classes.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::FormatError, std::string("prompt set: ") + e.what());
  }
  set.validate();
  return set;
}

PromptSet load_prompt_set(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::FormatError, path.string() + ": " + e.what());
  }
  return parse_prompt_set(doc, path.parent_path());
}

EmbeddingLookup load_embedding_lookup(const std::filesystem::path& embeddings,
                                      const std::filesystem::path& sidecar) {
  const auto m = read_embedding_file(embeddings);
  const auto texts = read_metadata_sidecar(sidecar, m.rows());
  EmbeddingLookup lookup;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto row = m.row(i);
    lookup.insert(texts[i], std::vector<float>(row.begin(), row.end()));
  }
  return lookup;
}

nlohmann::json prediction_to_json(const Prediction& pred, std::size_t top_r, bool with_trace) {
  nlohmann::json j;
  j["class_id"] = pred.class_id ? nlohmann::json(*pred.class_id) : nlohmann::json(nullptr);
  j["score"] = pred.score;
  j["unknown"] = pred.unknown;
  auto ranked = nlohmann::json::array();
  for (std::size_t r = 0; r < pred.ranked.size() && r < top_r; ++r) {
    ranked.push_back({{"class_id", pred.ranked[r].class_id}, {"score", pred.ranked[r].score}});
  }
  j["ranked"] = std::move(ranked);
  if (with_trace) {
    auto trace = nlohmann::json::array();
    for (const auto& t : pred.trace) {
      trace.push_back({{"anchor_id", t.anchor_id},
                       {"query_value", t.query_value},
                       {"candidate_value", t.candidate_value},
                       {"contribution", t.contribution}});
    }
    j["trace"] = std::move(trace);
  }
  return j;
}

void write_predictions_jsonl(std::ostream& out, std::span<const Prediction> preds,
                             std::size_t top_r, bool with_trace) {
  for (std::size_t i = 0; i < preds.size(); ++i) {
    auto j = prediction_to_json(preds[i], top_r, with_trace);
    j["query"] = i;
    out << j.dump() << '\n';
  }
}

}  // namespace asif
