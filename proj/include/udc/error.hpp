// Copyright 2026 udcnet contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace udc {

// Stable error categories; the CLI maps these to process exit codes.
enum class ErrorCode {
  ShapeMismatch,    // tensor dimensions incompatible with the operation
  DomainError,      // value outside the mathematical domain of the operation
  InvalidArgument,  // bad configuration or parameter value
  IoError,          // file system failure
  FormatError,      // unparseable or corrupt file content
  SpecMismatch,     // weight file does not match the model it is applied to
  NumericFailure,   // non-finite value where finiteness is required
  StateError,       // object used outside its legal lifecycle
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void check(bool ok, ErrorCode code, const std::string& message) {
  if (!ok) fail(code, message);
}

}  // namespace udc
