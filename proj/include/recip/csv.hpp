// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace recip {

// Minimal CSV reader: comma separators, optional RFC-4180 double-quote
// escaping, LF or CRLF line endings. Lines that are blank or start with '#'
// (outside quotes) are skipped, which lets every artifact carry a
// self-describing comment header.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  // Reads the next record into `fields`. Returns false at end of input.
  // Throws RecipError{Parse} on an unterminated quote.
  bool next(std::vector<std::string>& fields);

  // 1-based line number of the record most recently returned.
  std::size_t line() const noexcept { return record_line_; }

 private:
  std::istream& in_;
  std::size_t current_line_ = 0;
  std::size_t record_line_ = 0;
};

// Quotes a field if it contains a comma, quote, or newline.
std::string csv_escape(const std::string& field);

// Pipe-delimited list helper for multi-valued fields (e.g. tags).
std::vector<std::string> split_pipe(const std::string& s);
std::string join_pipe(const std::vector<std::string>& parts);

// Fixed-format numeric rendering used by all CSV artifacts: `decimals`
// digits after the point, no exponent, locale-independent.
std::string format_fixed(double value, int decimals);

}  // namespace recip
