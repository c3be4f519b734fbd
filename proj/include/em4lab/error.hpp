#pragma once

#include <stdexcept>
#include <string>

namespace em4lab {

enum class ErrorCode {
  kDimensionMismatch,
  kNotPositiveDefinite,
  kNotAntisymmetric,
  kSymmetryViolation,
  kSyntax,
  kUnknownFunction,
  kUnboundVariable,
  kDomain,
  kStencilOutsideDomain,
  kInvalidArgument,
  kValidation,
  kQuadrature,
  kConvergence,
  kBoundaryHit,
  kOrientation,
  kIo,
};

const char* to_string(ErrorCode code);

/// Single exception type for the library; `code()` tells callers (and the CLI
/// exit-code mapping) what went wrong.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Parse failure with the byte offset into the source text.
class ParseError : public Error {
 public:
  ParseError(ErrorCode code, std::size_t offset, const std::string& message)
      : Error(code, message + " at offset " + std::to_string(offset)),
        offset_(offset),
        detail_(message) {}

  std::size_t offset() const noexcept { return offset_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::size_t offset_;
  std::string detail_;
};

}  // namespace em4lab
