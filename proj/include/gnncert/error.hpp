#pragma once

#include <stdexcept>
#include <string>

namespace gnncert {

enum class ErrorCode {
  DimensionMismatch,
  NonBinaryAdjacency,
  InvalidClass,
  InvalidModel,
  InvalidGraph,
  InvalidSpec,
  ModeMismatch,
  CapExceeded,
  InconsistentFixings,
  UnboundedVariable,
  InfiniteBound,
  MissingVariable,
  NoBranchCandidate,
  EmptyInput,
  IoError,
  ParseError,
};

const char* to_string(ErrorCode code);

/// All recoverable failures in the library are reported through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gnncert
