#include "asif/anchor_store.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>
#include <unordered_set>

#include "asif/embedding_format.hpp"
#include "asif/error.hpp"
#include "json.hpp"

namespace asif {
namespace {

constexpr std::uint32_t kStoreFormatVersion = 1;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

class Fnv1a {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= b[i];
      h_ *= 0x100000001b3ull;
    }
  }
  void u64(std::uint64_t v) { bytes(&v, sizeof v); }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ull;
};

StoreGeneration fingerprint(const EmbeddingMatrix& a, const EmbeddingMatrix& b,
                            std::span<const AnchorId> ids,
                            const std::optional<std::vector<std::string>>& texts) {
  Fnv1a h;
  h.u64(a.dim());
  h.u64(b.dim());
  h.u64(ids.size());
  h.bytes(ids.data(), ids.size_bytes());
  h.bytes(a.data().data(), a.data().size_bytes());
  h.bytes(b.data().data(), b.data().size_bytes());
  h.u64(texts.has_value());
  if (texts) {
    for (const auto& t : *texts) {
      h.u64(t.size());
      h.bytes(t.data(), t.size());
    }
  }
  return splitmix64(h.value());
}

std::int64_t now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

void normalize_side(EmbeddingMatrix& m, const char* side) {
  try {
    m.normalize_rows();
  } catch (const Error& e) {
    throw Error(ErrorKind::DegenerateRow,
                std::string(side) + " row " + std::to_string(e.index()) + " has zero norm",
                e.index());
  }
}

bool rows_unit_norm(const EmbeddingMatrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (std::abs(l2_norm(m.row(i)) - 1.0) > kUnitNormTolerance) return false;
  }
  return true;
}

}  // namespace

AnchorStore::AnchorStore(std::size_t dim_a, std::size_t dim_b, bool with_metadata)
    : mode_a_(dim_a), mode_b_(dim_b) {
  mode_a_.normalize_rows();
  mode_b_.normalize_rows();
  if (with_metadata) texts_.emplace();
  generation_ = fingerprint(mode_a_, mode_b_, ids_, texts_);
}

AnchorStore AnchorStore::from_pairs(EmbeddingMatrix a, EmbeddingMatrix b,
                                    std::optional<std::vector<std::string>> texts) {
  if (a.rows() != b.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "mode_a has " + std::to_string(a.rows()) +
                                              " rows, mode_b has " + std::to_string(b.rows()));
  }
  if (texts && texts->size() != a.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "metadata has " + std::to_string(texts->size()) +
                                              " entries for " + std::to_string(a.rows()) +
                                              " rows");
  }
  normalize_side(a, "mode_a");
  normalize_side(b, "mode_b");
  AnchorStore s(a.dim(), b.dim());
  s.ids_.resize(a.rows());
  std::iota(s.ids_.begin(), s.ids_.end(), AnchorId{0});
  s.next_id_ = a.rows();
  s.mode_a_ = std::move(a);
  s.mode_b_ = std::move(b);
  s.texts_ = std::move(texts);
  s.generation_ = fingerprint(s.mode_a_, s.mode_b_, s.ids_, s.texts_);
  s.rebuild_index();
  return s;
}

AnchorStore AnchorStore::from_parts(EmbeddingMatrix a, EmbeddingMatrix b,
                                    std::vector<AnchorId> ids,
                                    std::optional<std::vector<std::string>> texts,
                                    AnchorId next_id, StoreGeneration generation,
                                    std::vector<EditLogEntry> log) {
  if (a.rows() != b.rows() || a.rows() != ids.size()) {
    throw Error(ErrorKind::ShapeMismatch, "row counts of matrices and ids disagree");
  }
  if (texts && texts->size() != ids.size()) {
    throw Error(ErrorKind::ShapeMismatch, "metadata length disagrees with row count");
  }
  if (!rows_unit_norm(a) || !rows_unit_norm(b)) {
    throw Error(ErrorKind::FormatError, "stored matrices are not unit-normalized");
  }
  AnchorStore s(a.dim(), b.dim());
  s.mode_a_ = EmbeddingMatrix(a.rows(), a.dim(), std::vector<float>(a.data().begin(), a.data().end()), true);
  s.mode_b_ = EmbeddingMatrix(b.rows(), b.dim(), std::vector<float>(b.data().begin(), b.data().end()), true);
  s.ids_ = std::move(ids);
  s.texts_ = std::move(texts);
  s.next_id_ = next_id;
  s.generation_ = generation;
  s.log_ = std::move(log);
  s.rebuild_index();
  if (s.index_.size() != s.ids_.size()) {
    throw Error(ErrorKind::FormatError, "anchor ids are not unique");
  }
  for (AnchorId id : s.ids_) {
    if (id >= next_id) throw Error(ErrorKind::FormatError, "anchor id beyond next_id");
  }
  return s;
}

void AnchorStore::rebuild_index() {
  index_.clear();
  index_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) index_.emplace(ids_[i], i);
}

std::optional<std::size_t> AnchorStore::position_of(AnchorId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string_view AnchorStore::text(AnchorId id) const {
  auto pos = position_of(id);
  if (!pos) throw Error(ErrorKind::UnknownAnchor, "anchor " + std::to_string(id));
  if (!texts_) return {};
  return (*texts_)[*pos];
}

void AnchorStore::apply_edit(EditOp op, AnchorId id) {
  generation_ = splitmix64(generation_ ^ splitmix64((id << 2) | static_cast<std::uint64_t>(op)));
  log_.push_back({op, id, now_ms()});
}

AnchorId AnchorStore::add_pair(std::span<const float> emb_a, std::span<const float> emb_b,
                               std::string text) {
  if (emb_a.size() != dim_a() || emb_b.size() != dim_b()) {
    throw Error(ErrorKind::DimMismatch,
                "pair has dims (" + std::to_string(emb_a.size()) + ", " +
                    std::to_string(emb_b.size()) + "), store has (" + std::to_string(dim_a()) +
                    ", " + std::to_string(dim_b()) + ")");
  }
  std::vector<float> na(emb_a.size()), nb(emb_b.size());
  if (!canonicalize_row(emb_a, na)) throw Error(ErrorKind::DegenerateRow, "mode_a vector has zero norm");
  if (!canonicalize_row(emb_b, nb)) throw Error(ErrorKind::DegenerateRow, "mode_b vector has zero norm");
  const AnchorId id = next_id_++;
  mode_a_.append_row(na);
  mode_b_.append_row(nb);
  ids_.push_back(id);
  if (texts_) texts_->push_back(std::move(text));
  index_.emplace(id, ids_.size() - 1);
  apply_edit(EditOp::Add, id);
  return id;
}

void AnchorStore::remove_pair(AnchorId id) { remove_pairs(std::span<const AnchorId>(&id, 1)); }

void AnchorStore::remove_pairs(std::span<const AnchorId> ids) {
  std::unordered_set<AnchorId> doomed;
  for (AnchorId id : ids) {
    if (!contains(id) || !doomed.insert(id).second) {
      throw Error(ErrorKind::UnknownAnchor, "anchor " + std::to_string(id) + " not in store");
    }
  }
  if (doomed.empty()) return;
  const std::size_t da = dim_a(), db = dim_b();
  std::vector<float> a, b;
  a.reserve((size() - doomed.size()) * da);
  b.reserve((size() - doomed.size()) * db);
  std::vector<AnchorId> kept_ids;
  std::optional<std::vector<std::string>> kept_texts;
  if (texts_) kept_texts.emplace();
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (doomed.count(ids_[i])) continue;
    auto ra = mode_a_.row(i);
    auto rb = mode_b_.row(i);
    a.insert(a.end(), ra.begin(), ra.end());
    b.insert(b.end(), rb.begin(), rb.end());
    kept_ids.push_back(ids_[i]);
    if (texts_) kept_texts->push_back(std::move((*texts_)[i]));
  }
  const std::size_t n = kept_ids.size();
  mode_a_ = EmbeddingMatrix(n, da, std::move(a), true);
  mode_b_ = EmbeddingMatrix(n, db, std::move(b), true);
  ids_ = std::move(kept_ids);
  texts_ = std::move(kept_texts);
  rebuild_index();
  for (AnchorId id : ids) apply_edit(EditOp::Remove, id);
}

AnchorStore AnchorStore::prefix(std::size_t m) const {
  if (m > size()) {
    throw Error(ErrorKind::PrefixTooLarge,
                "prefix " + std::to_string(m) + " exceeds store size " + std::to_string(size()));
  }
  std::vector<std::size_t> order(size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return ids_[x] < ids_[y]; });
  order.resize(m);
  std::sort(order.begin(), order.end());
  std::vector<float> a, b;
  std::vector<AnchorId> ids;
  std::optional<std::vector<std::string>> texts;
  if (texts_) texts.emplace();
  for (std::size_t i : order) {
    auto ra = mode_a_.row(i);
    auto rb = mode_b_.row(i);
    a.insert(a.end(), ra.begin(), ra.end());
    b.insert(b.end(), rb.begin(), rb.end());
    ids.push_back(ids_[i]);
    if (texts_) texts->push_back((*texts_)[i]);
  }
  AnchorStore s(dim_a(), dim_b());
  s.mode_a_ = EmbeddingMatrix(m, dim_a(), std::move(a), true);
  s.mode_b_ = EmbeddingMatrix(m, dim_b(), std::move(b), true);
  s.ids_ = std::move(ids);
  s.texts_ = std::move(texts);
  s.next_id_ = next_id_;
  s.generation_ = fingerprint(s.mode_a_, s.mode_b_, s.ids_, s.texts_);
  s.rebuild_index();
  return s;
}

AnchorStore AnchorStore::permuted(std::span<const std::size_t> order) const {
  if (order.size() != size()) {
    throw Error(ErrorKind::ShapeMismatch, "permutation length differs from store size");
  }
  std::vector<float> a, b;
  std::vector<AnchorId> ids;
  std::optional<std::vector<std::string>> texts;
  if (texts_) texts.emplace();
  std::vector<bool> seen(size(), false);
  for (std::size_t i : order) {
    if (i >= size() || seen[i]) throw Error(ErrorKind::InvalidArgument, "not a permutation");
    seen[i] = true;
    auto ra = mode_a_.row(i);
    auto rb = mode_b_.row(i);
    a.insert(a.end(), ra.begin(), ra.end());
    b.insert(b.end(), rb.begin(), rb.end());
    ids.push_back(ids_[i]);
    if (texts_) texts->push_back((*texts_)[i]);
  }
  AnchorStore s(dim_a(), dim_b());
  s.mode_a_ = EmbeddingMatrix(size(), dim_a(), std::move(a), true);
  s.mode_b_ = EmbeddingMatrix(size(), dim_b(), std::move(b), true);
  s.ids_ = std::move(ids);
  s.texts_ = std::move(texts);
  s.next_id_ = next_id_;
  s.generation_ = fingerprint(s.mode_a_, s.mode_b_, s.ids_, s.texts_);
  s.rebuild_index();
  return s;
}

bool AnchorStore::operator==(const AnchorStore& other) const {
  return mode_a_ == other.mode_a_ && mode_b_ == other.mode_b_ && ids_ == other.ids_ &&
         texts_ == other.texts_ && next_id_ == other.next_id_ &&
         generation_ == other.generation_ && log_ == other.log_;
}

std::vector<std::string> read_metadata_sidecar(const std::filesystem::path& path,
                                               std::size_t rows) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::vector<std::string> texts(rows);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto obj = nlohmann::json::parse(line);
      const auto id = obj.at("id").get<std::int64_t>();
      if (id < 0 || static_cast<std::size_t>(id) >= rows) {
        throw Error(ErrorKind::FormatError,
                    path.string() + ":" + std::to_string(lineno) + ": id out of range");
      }
      texts[static_cast<std::size_t>(id)] = obj.at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::FormatError,
                  path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return texts;
}

AnchorStore ingest(const std::filesystem::path& path_a, const std::filesystem::path& path_b,
                   const std::optional<std::filesystem::path>& metadata) {
  auto a = read_embedding_file(path_a);
  auto b = read_embedding_file(path_b);
  std::optional<std::vector<std::string>> texts;
  if (metadata) {
    if (a.rows() != b.rows()) {
      throw Error(ErrorKind::ShapeMismatch, "mode_a has " + std::to_string(a.rows()) +
                                                " rows, mode_b has " + std::to_string(b.rows()));
    }
    texts = read_metadata_sidecar(*metadata, a.rows());
  }
  return AnchorStore::from_pairs(std::move(a), std::move(b), std::move(texts));
}

// Store file, little-endian:
//   "ASST", version u32, n u64, next_id u64, generation u64, flags u8 (bit 0:
//   metadata), 3 reserved zero bytes, u64 length + embedding file for each
//   side, n ids (u64), n texts (u32 length + bytes) if flagged, u64 log
//   length and (op u8, id u64, timestamp u64) per entry.
std::vector<std::byte> serialize_store(const AnchorStore& store) {
  std::vector<std::byte> out;
  for (char c : {'A', 'S', 'S', 'T'}) out.push_back(static_cast<std::byte>(c));
  detail::put_u32(out, kStoreFormatVersion);
  detail::put_u64(out, store.size());
  detail::put_u64(out, store.next_id());
  detail::put_u64(out, store.generation());
  detail::put_u8(out, store.has_metadata() ? 1 : 0);
  for (int i = 0; i < 3; ++i) detail::put_u8(out, 0);
  for (Side s : {Side::A, Side::B}) {
    auto block = serialize_embeddings(store.side(s));
    detail::put_u64(out, block.size());
    out.insert(out.end(), block.begin(), block.end());
  }
  for (AnchorId id : store.ids()) detail::put_u64(out, id);
  if (store.has_metadata()) {
    for (AnchorId id : store.ids()) {
      auto t = store.text(id);
      detail::put_u32(out, static_cast<std::uint32_t>(t.size()));
      const auto* raw = reinterpret_cast<const std::byte*>(t.data());
      out.insert(out.end(), raw, raw + t.size());
    }
  }
  detail::put_u64(out, store.edit_log().size());
  for (const auto& e : store.edit_log()) {
    detail::put_u8(out, static_cast<std::uint8_t>(e.op));
    detail::put_u64(out, e.anchor_id);
    detail::put_u64(out, static_cast<std::uint64_t>(e.timestamp_ms));
  }
  return out;
}

AnchorStore parse_store(std::span<const std::byte> bytes) {
  detail::ByteReader in(bytes);
  auto magic = in.take(4);
  if (std::memcmp(magic.data(), "ASST", 4) != 0) {
    throw Error(ErrorKind::FormatError, "bad store magic (expected \"ASST\")");
  }
  if (const auto v = in.u32(); v != kStoreFormatVersion) {
    throw Error(ErrorKind::FormatError, "unsupported store version " + std::to_string(v));
  }
  const auto n = in.u64();
  const auto next_id = in.u64();
  const auto generation = in.u64();
  const auto flags = in.u8();
  if (flags > 1) throw Error(ErrorKind::FormatError, "unknown store flags");
  for (auto b : in.take(3)) {
    if (b != std::byte{0}) throw Error(ErrorKind::FormatError, "reserved bytes must be zero");
  }
  auto read_block = [&] {
    const auto len = in.u64();
    if (len > in.remaining()) throw Error(ErrorKind::FormatError, "truncated matrix block");
    return parse_embeddings(in.take(static_cast<std::size_t>(len)));
  };
  auto a = read_block();
  auto b = read_block();
  if (a.rows() != n || b.rows() != n) {
    throw Error(ErrorKind::FormatError, "matrix row counts disagree with header");
  }
  if (n > in.remaining() / sizeof(std::uint64_t)) {
    throw Error(ErrorKind::FormatError, "truncated id table");
  }
  std::vector<AnchorId> ids(static_cast<std::size_t>(n));
  for (auto& id : ids) id = in.u64();
  std::optional<std::vector<std::string>> texts;
  if (flags & 1) {
    texts.emplace();
    texts->reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto len = in.u32();
      auto raw = in.take(len);
      texts->emplace_back(reinterpret_cast<const char*>(raw.data()), raw.size());
    }
  }
  const auto log_len = in.u64();
  if (log_len > in.remaining() / 17) throw Error(ErrorKind::FormatError, "truncated edit log");
  std::vector<EditLogEntry> log;
  log.reserve(static_cast<std::size_t>(log_len));
  for (std::uint64_t i = 0; i < log_len; ++i) {
    const auto op = in.u8();
    if (op != 1 && op != 2) throw Error(ErrorKind::FormatError, "bad edit op");
    const auto id = in.u64();
    const auto ts = static_cast<std::int64_t>(in.u64());
    log.push_back({static_cast<EditOp>(op), id, ts});
  }
  if (in.remaining() != 0) throw Error(ErrorKind::FormatError, "trailing bytes after store");
  return AnchorStore::from_parts(std::move(a), std::move(b), std::move(ids), std::move(texts),
                                 next_id, generation, std::move(log));
}

void save_store(const AnchorStore& store, const std::filesystem::path& path) {
  write_file_bytes(path, serialize_store(store));
}

AnchorStore load_store(const std::filesystem::path& path) {
  return parse_store(read_file_bytes(path));
}

AnchorStore replay_edits(const AnchorStore& initial, std::span<const EditLogEntry> log,
                         const AnchorStore& vector_source) {
  AnchorStore out = initial;
  std::vector<float> placeholder_a(initial.dim_a(), 0.0f), placeholder_b(initial.dim_b(), 0.0f);
  placeholder_a[0] = 1.0f;
  placeholder_b[0] = 1.0f;
  for (const auto& e : log) {
    if (e.op == EditOp::Remove) {
      out.remove_pair(e.anchor_id);
      continue;
    }
    AnchorId got;
    if (auto pos = vector_source.position_of(e.anchor_id)) {
      got = out.add_pair(vector_source.mode_a().row(*pos), vector_source.mode_b().row(*pos),
                         std::string(vector_source.text(e.anchor_id)));
    } else {
      got = out.add_pair(placeholder_a, placeholder_b);
    }
    if (got != e.anchor_id) {
      throw Error(ErrorKind::InvalidArgument, "edit log does not start from this store");
    }
  }
  return out;
}

}  // namespace asif
