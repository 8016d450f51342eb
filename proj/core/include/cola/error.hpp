#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cola {

/// Machine-readable error classes. The CLI prints the class name verbatim.
enum class ErrorKind : std::uint8_t {
  kShape,
  kState,
  kEmptyBatch,
  kIndex,
  kRange,
  kParameter,
  kEmptyInput,
  kFormat,
  kGeneration,
  kAdaptationImpossible,
  kDivergence,
  kConfig,
  kIo,
};

std::string_view error_kind_name(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Binary format violation; `offset` is the byte position where decoding failed.
class FormatError : public Error {
 public:
  FormatError(std::uint64_t offset, const std::string& message)
      : Error(ErrorKind::kFormat, message + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace cola
