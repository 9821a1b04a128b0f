// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace recip {

enum class ErrorCode {
  InvalidArgument,  // bad parameter, unknown key, malformed config value
  MissingInput,     // a required input file/artifact does not exist
  Parse,            // malformed input content (CSV/JSON/timestamp)
  Io,               // filesystem failure (open/write/rename)
  Numeric,          // degenerate data or failed numerical routine
  Internal,         // bug: broken invariant
};

const char* error_code_name(ErrorCode c) noexcept;

class RecipError : public std::runtime_error {
 public:
  RecipError(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_error(ErrorCode code, const std::string& what) {
  throw RecipError(code, what);
}

}  // namespace recip
