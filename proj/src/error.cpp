#include "asif/error.hpp"

namespace asif {

std::string_view error_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::DegenerateRow: return "DegenerateRow";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::DegenerateQuery: return "DegenerateQuery";
    case ErrorKind::UnknownAnchor: return "UnknownAnchor";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::EmptyRepresentation: return "EmptyRepresentation";
    case ErrorKind::StoreGenerationMismatch: return "StoreGenerationMismatch";
    case ErrorKind::EmptyStore: return "EmptyStore";
    case ErrorKind::PrefixTooLarge: return "PrefixTooLarge";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Error";
}

Error::Error(ErrorKind kind, const std::string& detail, std::size_t index)
    : std::runtime_error(std::string(error_name(kind)) + ": " + detail),
      kind_(kind),
      index_(index) {}

}  // namespace asif
