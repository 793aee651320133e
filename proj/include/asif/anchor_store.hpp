#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "asif/embedding_matrix.hpp"

namespace asif {

using AnchorId = std::uint64_t;
/// Identifies the edit state of a store. Derived deterministically from the
/// initial contents and the sequence of edits.
using StoreGeneration = std::uint64_t;

/// Which half of the paired anchors a computation runs against.
enum class Side : std::uint8_t { A = 0, B = 1 };

enum class EditOp : std::uint8_t { Add = 1, Remove = 2 };

struct EditLogEntry {
  EditOp op;
  AnchorId anchor_id;
  std::int64_t timestamp_ms;

  /// Timestamps are ignored.
  bool operator==(const EditLogEntry& o) const noexcept {
    return op == o.op && anchor_id == o.anchor_id;
  }
};

/// Paired anchor embeddings. Row i of mode_a and row i of mode_b belong to
/// anchor ids()[i]. Ids are never reused; removing a row keeps every other
/// id, and rows keep their relative order.
class AnchorStore {
 public:
  AnchorStore(std::size_t dim_a, std::size_t dim_b, bool with_metadata = false);

  /// Normalizes both matrices and assigns ids 0..n-1. `texts`, if given,
  /// carries one payload per row.
  static AnchorStore from_pairs(EmbeddingMatrix a, EmbeddingMatrix b,
                                std::optional<std::vector<std::string>> texts = std::nullopt);

  /// Reassembles a store from validated parts (used by load and tests).
  /// Matrices must already be normalized.
  static AnchorStore from_parts(EmbeddingMatrix a, EmbeddingMatrix b, std::vector<AnchorId> ids,
                                std::optional<std::vector<std::string>> texts, AnchorId next_id,
                                StoreGeneration generation, std::vector<EditLogEntry> log);

  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }
  std::size_t dim_a() const noexcept { return mode_a_.dim(); }
  std::size_t dim_b() const noexcept { return mode_b_.dim(); }
  const EmbeddingMatrix& mode_a() const noexcept { return mode_a_; }
  const EmbeddingMatrix& mode_b() const noexcept { return mode_b_; }
  const EmbeddingMatrix& side(Side s) const noexcept { return s == Side::A ? mode_a_ : mode_b_; }
  std::span<const AnchorId> ids() const noexcept { return ids_; }

  std::optional<std::size_t> position_of(AnchorId id) const;
  bool contains(AnchorId id) const { return position_of(id).has_value(); }

  bool has_metadata() const noexcept { return texts_.has_value(); }
  /// Payload of an anchor; empty when metadata is absent. Throws UnknownAnchor.
  std::string_view text(AnchorId id) const;

  AnchorId next_id() const noexcept { return next_id_; }
  StoreGeneration generation() const noexcept { return generation_; }
  std::span<const EditLogEntry> edit_log() const noexcept { return log_; }

  /// Normalizes and appends a pair; returns its fresh id.
  AnchorId add_pair(std::span<const float> emb_a, std::span<const float> emb_b,
                    std::string text = {});
  void remove_pair(AnchorId id);
  /// Removes several anchors in one pass, logging them in the given order.
  void remove_pairs(std::span<const AnchorId> ids);

  /// The m anchors with the smallest ids (earliest ingested), as a new store
  /// with its own generation.
  AnchorStore prefix(std::size_t m) const;

  /// Same anchors, rows reordered: row i of the result is row order[i] here.
  AnchorStore permuted(std::span<const std::size_t> order) const;

  /// Content equality: matrices, ids, metadata, next id, generation, and
  /// edit operations (not timestamps).
  bool operator==(const AnchorStore& other) const;

 private:
  void rebuild_index();
  void apply_edit(EditOp op, AnchorId id);

  EmbeddingMatrix mode_a_;
  EmbeddingMatrix mode_b_;
  std::vector<AnchorId> ids_;
  std::optional<std::vector<std::string>> texts_;
  AnchorId next_id_ = 0;
  StoreGeneration generation_ = 0;
  std::vector<EditLogEntry> log_;
  std::unordered_map<AnchorId, std::size_t> index_;
};

/// Reads two binary embedding files (plus an optional JSON-lines metadata
/// sidecar of {"id", "text"} objects) into a normalized store.
AnchorStore ingest(const std::filesystem::path& path_a, const std::filesystem::path& path_b,
                   const std::optional<std::filesystem::path>& metadata = std::nullopt);

std::vector<std::string> read_metadata_sidecar(const std::filesystem::path& path, std::size_t rows);

std::vector<std::byte> serialize_store(const AnchorStore& store);
AnchorStore parse_store(std::span<const std::byte> bytes);
void save_store(const AnchorStore& store, const std::filesystem::path& path);
AnchorStore load_store(const std::filesystem::path& path);

/// Re-applies `log` on top of `initial`. Vectors for added anchors come from
/// `vector_source` (normally the current store); anchors that were added and
/// later removed get a placeholder, since they do not survive the replay.
AnchorStore replay_edits(const AnchorStore& initial, std::span<const EditLogEntry> log,
                         const AnchorStore& vector_source);

/// Copy-on-write handle for sharing a store across threads. Readers take an
/// immutable snapshot; writers edit a private copy and publish it whole, so
/// no reader ever sees a half-applied edit.
class SharedStore {
 public:
  explicit SharedStore(AnchorStore store)
      : current_(std::make_shared<const AnchorStore>(std::move(store))) {}

  std::shared_ptr<const AnchorStore> snapshot() const {
    std::lock_guard lock(mutex_);
    return current_;
  }

  template <typename Edit>
  auto edit(Edit&& fn) {
    std::lock_guard writer(write_mutex_);
    auto copy = std::make_shared<AnchorStore>(*snapshot());
    if constexpr (std::is_void_v<decltype(fn(*copy))>) {
      fn(*copy);
      publish(std::move(copy));
    } else {
      auto result = fn(*copy);
      publish(std::move(copy));
      return result;
    }
  }

 private:
  void publish(std::shared_ptr<AnchorStore> next) {
    std::lock_guard lock(mutex_);
    current_ = std::move(next);
  }

  mutable std::mutex mutex_;
  std::mutex write_mutex_;
  std::shared_ptr<const AnchorStore> current_;
};

}  // namespace asif
