#pragma once

#include <stdexcept>
#include <string>

namespace ier {

/// Stable error categories. The C API maps these one-to-one onto status codes.
enum class ErrorCode {
  UnknownLabel,
  Parse,
  DimensionMismatch,
  Malformed,
  NonFiniteObjective,
  DegenerateData,
  UnknownTag,
  EmptyCorpus,
  EmptyInput,
  EmptyAfterFilter,
  LengthMismatch,
  Undefined,
  Decode,
  Io,
  InvalidArgument,
  IncompatibleModel,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ier
