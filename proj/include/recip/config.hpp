// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Flat `key = value` run configuration. Every key has a default; unknown
// keys are rejected so typos fail loudly. '#' starts a comment.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace recip {

class Config {
 public:
  // All keys at their defaults.
  Config();

  // Parses a config file and overlays it. Later values win.
  void load_file(const std::string& path);
  // Single assignment (CLI overrides). Throws on unknown keys.
  void set(const std::string& key, const std::string& value);

  const std::string& get(const std::string& key) const;
  bool has(const std::string& key) const noexcept;
  double get_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  // "" stays empty; otherwise comma-separated doubles.
  std::vector<double> get_double_list(const std::string& key) const;

  bool is_default(const std::string& key) const;

  // Canonical "key = value" lines (sorted), and the FNV-1a hash over them.
  // The hash stamps every artifact so mixed-config outputs are detectable.
  std::string canonical() const;
  std::uint64_t hash() const;

  // Keys explicitly set (file or CLI), for run manifests.
  const std::set<std::string>& overridden() const noexcept { return overridden_; }

  static const std::map<std::string, std::string>& defaults();

 private:
  std::map<std::string, std::string> values_;
  std::set<std::string> overridden_;
};

}  // namespace recip
