// Copyright 2026 udcnet contributors
// SPDX-License-Identifier: Apache-2.0

#include "udc/error.hpp"
#include "udc/tensor.hpp"

namespace udc {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::ShapeMismatch: return "shape mismatch";
    case ErrorCode::DomainError: return "domain error";
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::IoError: return "io error";
    case ErrorCode::FormatError: return "format error";
    case ErrorCode::SpecMismatch: return "spec mismatch";
    case ErrorCode::NumericFailure: return "numeric failure";
    case ErrorCode::StateError: return "state error";
  }
  return "unknown error";
}

std::string Shape::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," + std::to_string(w) + ")";
}

}  // namespace udc
