#include "asif/evalsweep.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "asif/embedding_format.hpp"
#include "asif/error.hpp"
#include "json.hpp"

namespace asif {

LabeledQueries load_labeled_queries(const std::filesystem::path& embeddings,
                                    const std::filesystem::path& labels) {
  LabeledQueries out{read_embedding_file(embeddings), {}};
  const std::size_t n = out.embeddings.rows();
  std::vector<std::optional<ClassId>> seen(n);
  std::ifstream in(labels);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + labels.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = labels.string() + ":" + std::to_string(lineno);
    try {
      auto obj = nlohmann::json::parse(line);
      const auto row = obj.at("row").get<std::int64_t>();
      if (row < 0 || static_cast<std::size_t>(row) >= n) {
        throw Error(ErrorKind::FormatError, where + ": row out of range");
      }
      auto& slot = seen[static_cast<std::size_t>(row)];
      if (slot) throw Error(ErrorKind::FormatError, where + ": duplicate row");
      slot = obj.at("class_id").get<ClassId>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::FormatError, where + ": " + e.what());
    }
  }
  out.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!seen[i]) {
      throw Error(ErrorKind::ShapeMismatch, "no label for query row " + std::to_string(i), i);
    }
    out.labels.push_back(*seen[i]);
  }
  return out;
}

double accuracy(std::span<const Prediction> preds, std::span<const ClassId> labels) {
  if (preds.size() != labels.size()) {
    throw Error(ErrorKind::ShapeMismatch, "one label per prediction required");
  }
  if (preds.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (!preds[i].unknown && preds[i].class_id == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

double evaluate(const LabeledQueries& queries, const AnchorStore& store, const PromptSet& prompts,
                const ProcessingConfig& cfg, const EvalOptions& opts) {
  if (queries.embeddings.rows() != queries.labels.size()) {
    throw Error(ErrorKind::ShapeMismatch, "one label per query row required");
  }
  for (std::size_t i = 0; i < queries.labels.size(); ++i) {
    if (!prompts.contains(queries.labels[i])) {
      throw Error(ErrorKind::InvalidArgument,
                  "label " + std::to_string(queries.labels[i]) + " is not a prompt class", i);
    }
  }
  const auto candidates = build_candidates(prompts, store, cfg, opts.aggregation, opts.lookup);
  const auto preds = classify_batch(queries.embeddings, store, candidates, cfg,
                                    opts.unknown_threshold, opts.block_size);
  return accuracy(preds, queries.labels);
}

void SweepSpec::validate(std::size_t store_size) const {
  if (k_values.empty() || p_values.empty() || size_prefixes.empty()) {
    throw Error(ErrorKind::InvalidArgument, "sweep lists must be nonempty");
  }
  for (auto k : k_values) {
    if (k < 1) throw Error(ErrorKind::InvalidArgument, "sweep k must be >= 1");
  }
  for (auto p : p_values) {
    if (!(p >= 1.0)) throw Error(ErrorKind::InvalidArgument, "sweep p must be >= 1");
  }
  for (auto m : size_prefixes) {
    if (m > store_size) {
      throw Error(ErrorKind::PrefixTooLarge, "prefix " + std::to_string(m) +
                                                 " exceeds store size " +
                                                 std::to_string(store_size));
    }
    if (m == 0) throw Error(ErrorKind::InvalidArgument, "prefix size must be >= 1");
  }
}

std::vector<SweepRow> sweep(const LabeledQueries& queries, const AnchorStore& store,
                            const PromptSet& prompts, const SweepSpec& spec,
                            const ProcessingConfig& cfg_base, const EvalOptions& opts) {
  spec.validate(store.size());
  std::map<std::size_t, AnchorStore> prefixes;
  for (auto m : spec.size_prefixes) {
    if (!prefixes.count(m)) prefixes.emplace(m, store.prefix(m));
  }
  std::vector<SweepRow> table;
  table.reserve(spec.k_values.size() * spec.p_values.size() * spec.size_prefixes.size());
  for (auto k : spec.k_values) {
    for (auto p : spec.p_values) {
      for (auto m : spec.size_prefixes) {
        ProcessingConfig cfg = cfg_base;
        cfg.k = k;
        cfg.p = p;
        table.push_back({k, p, m, evaluate(queries, prefixes.at(m), prompts, cfg, opts)});
      }
    }
  }
  return table;
}

void write_sweep_csv(std::span<const SweepRow> table, std::ostream& out) {
  out << "k,p,prefix_size,accuracy\n";
  char buf[128];
  for (const auto& r : table) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%zu,%.6f\n", r.k, r.p, r.prefix_size, r.accuracy);
    out << buf;
  }
}

void export_csv(std::span<const SweepRow> table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  write_sweep_csv(table, out);
  if (!out) throw Error(ErrorKind::IoError, "write failed on " + path.string());
}

std::vector<SweepRow> parse_sweep_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "k,p,prefix_size,accuracy") {
    throw Error(ErrorKind::FormatError, "missing sweep CSV header");
  }
  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    SweepRow r{};
    char c1 = 0, c2 = 0, c3 = 0;
    std::istringstream ls(line);
    if (!(ls >> r.k >> c1 >> r.p >> c2 >> r.prefix_size >> c3 >> r.accuracy) || c1 != ',' ||
        c2 != ',' || c3 != ',') {
      throw Error(ErrorKind::FormatError, "bad sweep CSV row: " + line);
    }
    rows.push_back(r);
  }
  return rows;
}

}  // namespace asif
