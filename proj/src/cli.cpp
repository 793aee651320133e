#include "asif/cli.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "asif/anchor_store.hpp"
#include "asif/classifier.hpp"
#include "asif/classifier_io.hpp"
#include "asif/embedding_format.hpp"
#include "asif/error.hpp"
#include "asif/evalsweep.hpp"
#include "asif/parallel.hpp"
#include "json.hpp"

namespace asif {
namespace {

constexpr int kExitError = 2;

struct CliConfig {
  std::string store_path;
  std::size_t k = 800;
  double p = 8.0;
  std::string sign_policy = "signed";
  std::string aggregation = "mean";
  float unknown_threshold = 0.0f;
  std::size_t block_size = kDefaultBlockSize;
  std::string format;

  ProcessingConfig processing() const {
    ProcessingConfig cfg;
    cfg.k = k;
    cfg.p = p;
    cfg.sign_policy = sign_policy == "clamp" ? SignPolicy::ClampNegative : SignPolicy::SignedPower;
    cfg.validate();
    return cfg;
  }
  Aggregation agg() const {
    return aggregation == "max" ? Aggregation::MaxScore : Aggregation::MeanThenRenormalize;
  }
};

// Exclusive advisory lock on the store file for the lifetime of an edit.
class StoreLock {
 public:
  explicit StoreLock(const std::string& path) : fd_(::open(path.c_str(), O_RDONLY)) {
    if (fd_ < 0) throw Error(ErrorKind::IoError, "cannot open " + path);
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      throw Error(ErrorKind::IoError, "cannot lock " + path);
    }
  }
  ~StoreLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  StoreLock(const StoreLock&) = delete;
  StoreLock& operator=(const StoreLock&) = delete;

 private:
  int fd_;
};

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<std::byte> base64_decode(const std::string& in) {
  auto value = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+' || c == '-') return 62;
    if (c == '/' || c == '_') return 63;
    return -1;
  };
  std::vector<std::byte> out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (char c : in) {
    if (c == '=' || c == '\n' || c == '\r') continue;
    const int v = value(c);
    if (v < 0) throw Error(ErrorKind::FormatError, "invalid base64 input");
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::byte>((acc >> bits) & 0xffu));
    }
  }
  return out;
}

std::vector<float> decode_row(const std::string& b64) {
  const auto bytes = base64_decode(b64);
  if (bytes.empty() || bytes.size() % sizeof(float) != 0) {
    throw Error(ErrorKind::FormatError, "base64 row must hold a whole number of float32 values");
  }
  std::vector<float> row(bytes.size() / sizeof(float));
  std::memcpy(row.data(), bytes.data(), bytes.size());
  return row;
}

void add_shared_flags(CLI::App* cmd, CliConfig& cfg, bool needs_store) {
  auto* store = cmd->add_option("--store", cfg.store_path, "anchor store file");
  if (needs_store) store->required();
  cmd->add_option("--k", cfg.k, "nonzero entries kept per representation")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--p", cfg.p, "exponent applied to kept similarities")
      ->check(CLI::Range(1.0, 1e9));
  cmd->add_option("--sign-policy", cfg.sign_policy, "negative similarity handling")
      ->check(CLI::IsMember({"signed", "clamp"}));
  cmd->add_option("--aggregation", cfg.aggregation, "multi-prompt aggregation")
      ->check(CLI::IsMember({"mean", "max"}));
  cmd->add_option("--unknown-threshold", cfg.unknown_threshold,
                  "best scores below this yield an unknown prediction");
  cmd->add_option("--block-size", cfg.block_size, "anchor rows per search block")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--format", cfg.format, "output format")
      ->check(CLI::IsMember({"json", "jsonl", "csv", "text"}));
}

struct PromptArgs {
  std::string prompts;
  std::string prompt_embeddings;
  std::string prompt_texts;

  void add(CLI::App* cmd) {
    cmd->add_option("--prompts", prompts, "prompt set JSON")->required();
    cmd->add_option("--prompt-embeddings", prompt_embeddings,
                    "embedding file for text prompts");
    cmd->add_option("--prompt-texts", prompt_texts,
                    "JSON-lines {id, text} naming each prompt embedding row");
  }

  std::optional<EmbeddingLookup> lookup() const {
    if (prompt_embeddings.empty() != prompt_texts.empty()) {
      throw Error(ErrorKind::InvalidArgument,
                  "--prompt-embeddings and --prompt-texts must be given together");
    }
    if (prompt_embeddings.empty()) return std::nullopt;
    return load_embedding_lookup(prompt_embeddings, prompt_texts);
  }
};

std::vector<std::size_t> parse_sizes(const std::string& csv) {
  std::vector<std::size_t> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 0) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidArgument, "bad integer list: " + csv);
    }
  }
  return out;
}

std::vector<double> parse_reals(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidArgument, "bad number list: " + csv);
    }
  }
  return out;
}

// Writes to --out when given, else to stdout.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : out_(&fallback) {
    if (!path.empty()) {
      file_.open(path, std::ios::trunc);
      if (!file_) throw Error(ErrorKind::IoError, "cannot open " + path + " for writing");
      out_ = &file_;
    }
  }
  std::ostream& stream() { return *out_; }

 private:
  std::ofstream file_;
  std::ostream* out_;
};

void print_store_summary(const AnchorStore& s, const std::string& format, std::ostream& out) {
  if (format == "json" || format == "jsonl") {
    out << nlohmann::json{{"n", s.size()},
                          {"d_a", s.dim_a()},
                          {"d_b", s.dim_b()},
                          {"generation", hex(s.generation())},
                          {"metadata", s.has_metadata()},
                          {"next_id", s.next_id()},
                          {"edits", s.edit_log().size()}}
               .dump()
        << '\n';
    return;
  }
  out << "n: " << s.size() << '\n'
      << "d_a: " << s.dim_a() << '\n'
      << "d_b: " << s.dim_b() << '\n'
      << "generation: " << hex(s.generation()) << '\n'
      << "metadata: " << (s.has_metadata() ? "yes" : "no") << '\n'
      << "next_id: " << s.next_id() << '\n'
      << "edits: " << s.edit_log().size() << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Training-free alignment of two embedding spaces through paired anchors", "asif"};
  app.require_subcommand(1);
  CliConfig cfg;

  // ingest
  std::string path_a, path_b, metadata;
  auto* ingest_cmd = app.add_subcommand("ingest", "build a store from two embedding files");
  add_shared_flags(ingest_cmd, cfg, true);
  ingest_cmd->add_option("--a", path_a, "mode-a embedding file")->required();
  ingest_cmd->add_option("--b", path_b, "mode-b embedding file")->required();
  ingest_cmd->add_option("--metadata", metadata, "JSON-lines {id, text} sidecar");

  // classify / trace
  PromptArgs prompt_args;
  std::string queries_path, labels_path, out_path;
  bool with_trace = false;
  std::size_t top_r = kDefaultTopR;
  auto* classify_cmd = app.add_subcommand("classify", "zero-shot classify query embeddings");
  add_shared_flags(classify_cmd, cfg, true);
  prompt_args.add(classify_cmd);
  classify_cmd->add_option("--queries", queries_path, "query embedding file (mode a)")->required();
  classify_cmd->add_flag("--trace", with_trace, "include contribution traces");
  classify_cmd->add_option("--top-r", top_r, "ranked classes kept per prediction");
  classify_cmd->add_option("--out", out_path, "write predictions here instead of stdout");

  auto* trace_cmd = app.add_subcommand("trace", "explain predictions through their anchors");
  add_shared_flags(trace_cmd, cfg, true);
  prompt_args.add(trace_cmd);
  trace_cmd->add_option("--queries", queries_path, "query embedding file (mode a)")->required();
  trace_cmd->add_option("--out", out_path, "write the report here instead of stdout");

  // eval / sweep
  auto* eval_cmd = app.add_subcommand("eval", "zero-shot accuracy on labeled queries");
  add_shared_flags(eval_cmd, cfg, true);
  prompt_args.add(eval_cmd);
  eval_cmd->add_option("--queries", queries_path, "query embedding file")->required();
  eval_cmd->add_option("--labels", labels_path, "JSON-lines {row, class_id}")->required();

  std::string k_values = "50,200,800,3200", p_values = "1,2,4,8", prefixes;
  auto* sweep_cmd = app.add_subcommand("sweep", "accuracy over a (k, p, prefix size) grid");
  add_shared_flags(sweep_cmd, cfg, true);
  prompt_args.add(sweep_cmd);
  sweep_cmd->add_option("--queries", queries_path, "query embedding file")->required();
  sweep_cmd->add_option("--labels", labels_path, "JSON-lines {row, class_id}")->required();
  sweep_cmd->add_option("--k-values", k_values, "comma-separated k grid");
  sweep_cmd->add_option("--p-values", p_values, "comma-separated p grid");
  sweep_cmd->add_option("--prefixes", prefixes, "comma-separated anchor prefix sizes (default: all)");
  sweep_cmd->add_option("--out", out_path, "write CSV here instead of stdout");

  // edits
  std::string add_a_file, add_b_file, add_a_b64, add_b_b64, add_text;
  auto* add_cmd = app.add_subcommand("edit-add", "append anchor pairs to a store");
  add_shared_flags(add_cmd, cfg, true);
  add_cmd->add_option("--a", add_a_file, "mode-a embedding file with the new rows");
  add_cmd->add_option("--b", add_b_file, "mode-b embedding file with the new rows");
  add_cmd->add_option("--a-b64", add_a_b64, "one mode-a row as base64 float32 LE");
  add_cmd->add_option("--b-b64", add_b_b64, "one mode-b row as base64 float32 LE");
  add_cmd->add_option("--text", add_text, "metadata payload for the added pair(s)");

  std::vector<AnchorId> remove_ids;
  auto* remove_cmd = app.add_subcommand("edit-remove", "delete anchor pairs by id");
  add_shared_flags(remove_cmd, cfg, true);
  remove_cmd->add_option("--ids", remove_ids, "anchor ids to remove")->required()->delimiter(',');

  // prune
  std::uint64_t min_count = 1;
  std::string usage_csv;
  auto* prune_cmd = app.add_subcommand("prune", "replay a workload and drop unused anchors");
  add_shared_flags(prune_cmd, cfg, true);
  prompt_args.add(prune_cmd);
  prune_cmd->add_option("--queries", queries_path, "workload query embedding file")->required();
  prune_cmd->add_option("--min-count", min_count, "keep anchors used at least this often");
  prune_cmd->add_option("--usage-csv", usage_csv, "also export usage counts as CSV");

  auto* info_cmd = app.add_subcommand("info", "summarize a store");
  add_shared_flags(info_cmd, cfg, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kExitError;
  }

  if (auto threads = threads_from_env()) set_num_threads(*threads);

  try {
    if (ingest_cmd->parsed()) {
      std::optional<std::filesystem::path> meta;
      if (!metadata.empty()) meta = metadata;
      const auto store = ingest(path_a, path_b, meta);
      save_store(store, cfg.store_path);
      if (cfg.format == "json" || cfg.format == "jsonl") {
        out << nlohmann::json{{"n", store.size()}, {"d_a", store.dim_a()}, {"d_b", store.dim_b()}}
                   .dump()
            << '\n';
      } else {
        out << "ingested n=" << store.size() << " d_a=" << store.dim_a()
            << " d_b=" << store.dim_b() << '\n';
      }
      return 0;
    }

    if (info_cmd->parsed()) {
      print_store_summary(load_store(cfg.store_path), cfg.format, out);
      return 0;
    }

    if (classify_cmd->parsed() || trace_cmd->parsed()) {
      const auto processing = cfg.processing();
      const auto store = load_store(cfg.store_path);
      const auto prompts = load_prompt_set(prompt_args.prompts);
      const auto lookup = prompt_args.lookup();
      const auto candidates =
          build_candidates(prompts, store, processing, cfg.agg(), lookup ? &*lookup : nullptr);
      const auto queries = read_embedding_file(queries_path);
      const auto preds = classify_batch(queries, store, candidates, processing,
                                        cfg.unknown_threshold, cfg.block_size);
      Sink sink(out_path, out);
      const bool text = trace_cmd->parsed() ? (cfg.format.empty() || cfg.format == "text")
                                            : cfg.format == "text";
      if (text) {
        for (std::size_t i = 0; i < preds.size(); ++i) {
          sink.stream() << "query " << i << '\n' << trace_report(preds[i], store) << '\n';
        }
      } else {
        write_predictions_jsonl(sink.stream(), preds, top_r, with_trace || trace_cmd->parsed());
      }
      return 0;
    }

    if (eval_cmd->parsed()) {
      const auto processing = cfg.processing();
      const auto store = load_store(cfg.store_path);
      const auto prompts = load_prompt_set(prompt_args.prompts);
      const auto lookup = prompt_args.lookup();
      const auto queries = load_labeled_queries(queries_path, labels_path);
      EvalOptions opts{cfg.unknown_threshold, cfg.agg(), cfg.block_size,
                       lookup ? &*lookup : nullptr};
      const double acc = evaluate(queries, store, prompts, processing, opts);
      if (cfg.format == "json" || cfg.format == "jsonl") {
        out << nlohmann::json{{"accuracy", acc}, {"queries", queries.labels.size()}}.dump() << '\n';
      } else {
        char buf[64];
        std::snprintf(buf, sizeof buf, "accuracy: %.6f\n", acc);
        out << buf;
      }
      return 0;
    }

    if (sweep_cmd->parsed()) {
      const auto processing = cfg.processing();
      const auto store = load_store(cfg.store_path);
      const auto prompts = load_prompt_set(prompt_args.prompts);
      const auto lookup = prompt_args.lookup();
      const auto queries = load_labeled_queries(queries_path, labels_path);
      SweepSpec spec;
      spec.k_values = parse_sizes(k_values);
      spec.p_values = parse_reals(p_values);
      spec.size_prefixes = prefixes.empty() ? std::vector<std::size_t>{store.size()}
                                            : parse_sizes(prefixes);
      EvalOptions opts{cfg.unknown_threshold, cfg.agg(), cfg.block_size,
                       lookup ? &*lookup : nullptr};
      const auto table = sweep(queries, store, prompts, spec, processing, opts);
      Sink sink(out_path, out);
      write_sweep_csv(table, sink.stream());
      return 0;
    }

    if (add_cmd->parsed()) {
      std::vector<std::vector<float>> rows_a, rows_b;
      if (!add_a_file.empty() || !add_b_file.empty()) {
        if (add_a_file.empty() || add_b_file.empty()) {
          throw Error(ErrorKind::InvalidArgument, "--a and --b must be given together");
        }
        const auto a = read_embedding_file(add_a_file);
        const auto b = read_embedding_file(add_b_file);
        if (a.rows() != b.rows()) {
          throw Error(ErrorKind::ShapeMismatch, "--a and --b hold different row counts");
        }
        for (std::size_t i = 0; i < a.rows(); ++i) {
          rows_a.emplace_back(a.row(i).begin(), a.row(i).end());
          rows_b.emplace_back(b.row(i).begin(), b.row(i).end());
        }
      }
      if (!add_a_b64.empty() || !add_b_b64.empty()) {
        if (add_a_b64.empty() || add_b_b64.empty()) {
          throw Error(ErrorKind::InvalidArgument, "--a-b64 and --b-b64 must be given together");
        }
        rows_a.push_back(decode_row(add_a_b64));
        rows_b.push_back(decode_row(add_b_b64));
      }
      if (rows_a.empty()) throw Error(ErrorKind::InvalidArgument, "nothing to add");
      StoreLock lock(cfg.store_path);
      auto store = load_store(cfg.store_path);
      std::vector<AnchorId> added;
      for (std::size_t i = 0; i < rows_a.size(); ++i) {
        added.push_back(store.add_pair(rows_a[i], rows_b[i], add_text));
      }
      save_store(store, cfg.store_path);
      out << "added:";
      for (auto id : added) out << ' ' << id;
      out << "\nn: " << store.size() << "\ngeneration: " << hex(store.generation()) << '\n';
      err << "warning: store edited; previously built candidate sets are invalidated\n";
      return 0;
    }

    if (remove_cmd->parsed()) {
      StoreLock lock(cfg.store_path);
      auto store = load_store(cfg.store_path);
      store.remove_pairs(remove_ids);
      save_store(store, cfg.store_path);
      out << "removed:";
      for (auto id : remove_ids) out << ' ' << id;
      out << "\nn: " << store.size() << "\ngeneration: " << hex(store.generation()) << '\n';
      err << "warning: store edited; previously built candidate sets are invalidated\n";
      return 0;
    }

    if (prune_cmd->parsed()) {
      const auto processing = cfg.processing();
      StoreLock lock(cfg.store_path);
      auto store = load_store(cfg.store_path);
      const auto prompts = load_prompt_set(prompt_args.prompts);
      const auto lookup = prompt_args.lookup();
      const auto candidates =
          build_candidates(prompts, store, processing, cfg.agg(), lookup ? &*lookup : nullptr);
      const auto queries = read_embedding_file(queries_path);
      const auto preds = classify_batch(queries, store, candidates, processing,
                                        cfg.unknown_threshold, cfg.block_size);
      auto stats = make_usage_stats(store);
      record_workload_usage(stats, candidates, preds);
      if (!usage_csv.empty()) export_usage_csv(stats, usage_csv);
      const auto removed = prune_unused(store, stats, min_count);
      save_store(store, cfg.store_path);
      out << "removed:";
      for (auto id : removed) out << ' ' << id;
      out << "\nn: " << store.size() << "\ngeneration: " << hex(store.generation()) << '\n';
      if (!removed.empty()) {
        err << "warning: store edited; previously built candidate sets are invalidated\n";
      }
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace asif
