#include "asif/embedding_format.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

#include "asif/error.hpp"

namespace asif {
namespace detail {

static_assert(std::endian::native == std::endian::little,
              "embedding I/O assumes a little-endian host");

void put_u8(std::vector<std::byte>& out, std::uint8_t v) {
  out.push_back(static_cast<std::byte>(v));
}

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xffu));
}

void put_u64(std::vector<std::byte>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xffu));
}

void put_f32s(std::vector<std::byte>& out, std::span<const float> values) {
  const auto* raw = reinterpret_cast<const std::byte*>(values.data());
  out.insert(out.end(), raw, raw + values.size_bytes());
}

std::span<const std::byte> ByteReader::take(std::size_t n) {
  if (n > remaining()) {
    throw Error(ErrorKind::FormatError, "truncated input: need " + std::to_string(n) +
                                            " bytes at offset " + std::to_string(pos_) +
                                            ", have " + std::to_string(remaining()));
  }
  auto out = bytes_.subspan(pos_, n);
  pos_ += n;
  return out;
}

std::uint8_t ByteReader::u8() { return std::to_integer<std::uint8_t>(take(1)[0]); }

std::uint32_t ByteReader::u32() {
  auto b = take(4);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | std::to_integer<std::uint32_t>(b[i]);
  return v;
}

std::uint64_t ByteReader::u64() {
  auto b = take(8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | std::to_integer<std::uint64_t>(b[i]);
  return v;
}

void ByteReader::f32s(std::span<float> out) {
  auto b = take(out.size_bytes());
  std::memcpy(out.data(), b.data(), b.size());
}

}  // namespace detail

EmbeddingMatrix parse_embeddings(std::span<const std::byte> bytes) {
  detail::ByteReader in(bytes);
  auto magic = in.take(4);
  if (std::memcmp(magic.data(), "ASIF", 4) != 0) {
    throw Error(ErrorKind::FormatError, "bad magic (expected \"ASIF\")");
  }
  const auto version = in.u32();
  if (version != kEmbeddingFormatVersion) {
    throw Error(ErrorKind::FormatError, "unsupported format version " + std::to_string(version));
  }
  const auto dtype = in.u8();
  if (dtype != kDtypeFloat32) {
    throw Error(ErrorKind::FormatError, "unsupported dtype code " + std::to_string(dtype));
  }
  for (auto b : in.take(3)) {
    if (b != std::byte{0}) throw Error(ErrorKind::FormatError, "reserved bytes must be zero");
  }
  const std::uint64_t n = in.u64();
  const std::uint32_t d = in.u32();
  if (d == 0) throw Error(ErrorKind::FormatError, "dimension must be >= 1");
  if (n > std::numeric_limits<std::size_t>::max() / d / sizeof(float)) {
    throw Error(ErrorKind::FormatError, "row count overflows payload size");
  }
  const std::size_t count = static_cast<std::size_t>(n) * d;
  if (in.remaining() != count * sizeof(float)) {
    throw Error(ErrorKind::FormatError,
                "payload is " + std::to_string(in.remaining()) + " bytes, header declares " +
                    std::to_string(count * sizeof(float)));
  }
  std::vector<float> data(count);
  in.f32s(data);
  return EmbeddingMatrix(static_cast<std::size_t>(n), d, std::move(data));
}

std::vector<std::byte> serialize_embeddings(const EmbeddingMatrix& m) {
  if (m.dim() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorKind::InvalidArgument, "dimension does not fit the file format");
  }
  std::vector<std::byte> out;
  out.reserve(kEmbeddingHeaderSize + m.data().size_bytes());
  for (char c : {'A', 'S', 'I', 'F'}) out.push_back(static_cast<std::byte>(c));
  detail::put_u32(out, kEmbeddingFormatVersion);
  detail::put_u8(out, kDtypeFloat32);
  for (int i = 0; i < 3; ++i) detail::put_u8(out, 0);
  detail::put_u64(out, m.rows());
  detail::put_u32(out, static_cast<std::uint32_t>(m.dim()));
  detail::put_f32s(out, m.data());
  return out;
}

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = in.tellg();
  if (size < 0) throw Error(ErrorKind::IoError, "cannot size " + path.string());
  in.seekg(0);
  std::vector<std::byte> bytes(static_cast<std::size_t>(size));
  in.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!in) throw Error(ErrorKind::IoError, "short read on " + path.string());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::IoError, "write failed on " + path.string());
}

EmbeddingMatrix read_embedding_file(const std::filesystem::path& path) {
  return parse_embeddings(read_file_bytes(path));
}

void write_embedding_file(const std::filesystem::path& path, const EmbeddingMatrix& m) {
  write_file_bytes(path, serialize_embeddings(m));
}

}  // namespace asif
