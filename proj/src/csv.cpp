// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#include "recip/csv.hpp"

#include <cmath>
#include <cstdio>
#include <istream>

#include "recip/error.hpp"

namespace recip {

bool CsvReader::next(std::vector<std::string>& fields) {
  std::string line;
  for (;;) {
    if (!std::getline(in_, line)) return false;
    ++current_line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') continue;
    break;
  }
  record_line_ = current_line_;

  fields.clear();
  std::string field;
  bool in_quotes = false;
  std::size_t i = 0;
  for (;;) {
    if (i >= line.size()) {
      if (in_quotes) {
        // Quoted fields may span physical lines.
        std::string more;
        if (!std::getline(in_, more)) {
          throw_error(ErrorCode::Parse, "unterminated quoted CSV field starting on line " +
                                            std::to_string(record_line_));
        }
        ++current_line_;
        if (!more.empty() && more.back() == '\r') more.pop_back();
        field.push_back('\n');
        line = std::move(more);
        i = 0;
        continue;
      }
      break;
    }
    const char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          i += 2;
        } else {
          in_quotes = false;
          ++i;
        }
      } else {
        field.push_back(c);
        ++i;
      }
    } else if (c == '"' && field.empty()) {
      in_quotes = true;
      ++i;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      ++i;
    } else {
      field.push_back(c);
      ++i;
    }
  }
  fields.push_back(std::move(field));
  return true;
}

std::string csv_escape(const std::string& field) {
  bool needs_quotes = false;
  for (char c : field) {
    if (c == ',' || c == '"' || c == '\n' || c == '\r') {
      needs_quotes = true;
      break;
    }
  }
  if (!needs_quotes) return field;
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::vector<std::string> split_pipe(const std::string& s) {
  std::vector<std::string> parts;
  if (s.empty()) return parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == '|') {
      parts.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return parts;
}

std::string join_pipe(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.push_back('|');
    out += parts[i];
  }
  return out;
}

std::string format_fixed(double value, int decimals) {
  if (!std::isfinite(value)) {
    throw_error(ErrorCode::Numeric, "attempted to serialize a non-finite number");
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  // Normalize "-0.000000" to "0.000000" so output does not depend on the
  // sign of a zero produced by intermediate rounding.
  if (buf[0] == '-') {
    bool all_zero = true;
    for (const char* p = buf + 1; *p; ++p) {
      if (*p != '0' && *p != '.') {
        all_zero = false;
        break;
      }
    }
    if (all_zero) return std::string(buf + 1);
  }
  return std::string(buf);
}

}  // namespace recip
