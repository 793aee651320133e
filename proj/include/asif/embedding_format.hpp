#pragma once

// Binary embedding file, little-endian throughout:
//
//   offset  size  field
//   0       4     magic "ASIF"
//   4       4     format version (u32) = 1
//   8       1     dtype code (u8), 1 = float32
//   9       3     reserved, must be zero
//   12      8     n, row count (u64)
//   20      4     d, dimension (u32)
//   24      4*n*d float32 values, row-major

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "asif/embedding_matrix.hpp"

namespace asif {

inline constexpr std::uint32_t kEmbeddingFormatVersion = 1;
inline constexpr std::uint8_t kDtypeFloat32 = 1;
inline constexpr std::size_t kEmbeddingHeaderSize = 24;

/// Parses an in-memory embedding file. Rows are returned as stored (not
/// normalized). Throws FormatError on any deviation from the layout,
/// including trailing bytes.
EmbeddingMatrix parse_embeddings(std::span<const std::byte> bytes);
std::vector<std::byte> serialize_embeddings(const EmbeddingMatrix& m);

EmbeddingMatrix read_embedding_file(const std::filesystem::path& path);
void write_embedding_file(const std::filesystem::path& path, const EmbeddingMatrix& m);

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::byte> bytes);

namespace detail {

// Little-endian primitives shared by the embedding and store formats.
void put_u8(std::vector<std::byte>& out, std::uint8_t v);
void put_u32(std::vector<std::byte>& out, std::uint32_t v);
void put_u64(std::vector<std::byte>& out, std::uint64_t v);
void put_f32s(std::vector<std::byte>& out, std::span<const float> values);

/// Bounds-checked cursor; every read past the end throws FormatError.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::byte> bytes) : bytes_(bytes) {}

  std::span<const std::byte> take(std::size_t n);
  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  void f32s(std::span<float> out);

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  std::span<const std::byte> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail
}  // namespace asif
