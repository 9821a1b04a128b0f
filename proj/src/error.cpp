// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#include "recip/error.hpp"

namespace recip {

const char* error_code_name(ErrorCode c) noexcept {
  switch (c) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::MissingInput: return "missing_input";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Io: return "io";
    case ErrorCode::Numeric: return "numeric";
    case ErrorCode::Internal: return "internal";
  }
  return "unknown";
}

}  // namespace recip
