#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace asif {

enum class ErrorKind {
  FormatError,
  ShapeMismatch,
  DegenerateRow,
  DimMismatch,
  DegenerateQuery,
  UnknownAnchor,
  IoError,
  EmptyRepresentation,
  StoreGenerationMismatch,
  EmptyStore,
  PrefixTooLarge,
  InvalidArgument,
};

std::string_view error_name(ErrorKind kind) noexcept;

/// Every failure raised by the engine. The kind's name is the stable
/// identifier printed by the CLI.
class Error : public std::runtime_error {
 public:
  static constexpr std::size_t kNoIndex = std::numeric_limits<std::size_t>::max();

  Error(ErrorKind kind, const std::string& detail, std::size_t index = kNoIndex);

  ErrorKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return error_name(kind_); }
  /// Row or item index the error refers to, or kNoIndex.
  std::size_t index() const noexcept { return index_; }

 private:
  ErrorKind kind_;
  std::size_t index_;
};

}  // namespace asif
