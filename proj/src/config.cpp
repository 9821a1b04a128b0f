// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#include "recip/config.hpp"

#include <charconv>
#include <fstream>

#include "recip/error.hpp"
#include "recip/rng.hpp"

namespace recip {

const std::map<std::string, std::string>& Config::defaults() {
  static const std::map<std::string, std::string> kDefaults = {
      // pipeline
      {"out", "out"},
      {"events", ""},            // external event log; empty = out/events.csv
      {"seed", "42"},
      {"threads", "1"},
      {"half_length_hours", "48"},
      {"corpus_start", ""},      // ISO-8601 overrides for the observation bounds
      {"corpus_end", ""},
      // matching
      {"caliper", "0.05"},
      // fitting
      {"penalizer_main", "0.005"},
      {"penalizer_rt", "0.01"},
      {"penalizer_bins", "0.01"},
      {"fit_tol", "1e-7"},
      {"fit_max_iterations", "100"},
      {"fit_rt", "true"},
      {"clip_lo", "5"},
      {"clip_hi", "95"},
      {"subsample_pairs", "0"},
      // strata / bins
      {"tenure_boundaries", ""},  // days, comma-separated; empty = default buckets
      {"rt_bins_minutes", "0,15,30,60,120,240,480,720"},
      // report
      {"report_bin_hours", "1"},
      // simulator
      {"sim_n_users", "5000"},
      {"sim_n_answerers", "500"},
      {"sim_horizon_days", "180"},
      {"sim_start", "2020-01-01T00:00:00Z"},
      {"sim_question_rate_per_day", "0.02"},
      {"sim_first_question_delay_days", "30"},
      {"sim_tenure_balanced", "false"},
      {"sim_max_questions_per_user", "500"},
      {"sim_baseline_help_rate_per_hour", "0.015"},
      {"sim_background_help_rate_per_day", "0.05"},
      {"sim_activity_sigma", "0.6"},
      {"sim_answer_intercept", "0"},
      {"sim_answer_activity_coef", "0"},
      {"sim_answer_tag_coef", "1"},
      {"sim_n_tags", "8"},
      {"sim_tag_spread", "0.8"},
      {"sim_latency_median_hours", "0.34"},
      {"sim_latency_sigma", "2.33"},
      {"sim_rt_mixture_prob", "0"},
      {"sim_self_answer_prob", "0.01"},
      {"sim_negative_score_prob", "0.02"},
      {"sim_second_tag_prob", "0.15"},
      {"sim_beta0", "0"},
      {"sim_beta1", "0"},
      {"sim_beta2", "0"},
      {"sim_beta4", "0"},
      {"sim_tenure_profile", ""},      // multipliers on beta4, one per bucket
      {"sim_rt_bin_multipliers", ""},  // multipliers on beta4, one per bin
      {"sim_rt_gamma", ""},
      {"sim_rt_ref_mean", "3.93"},
      {"sim_rt_ref_sd", "0.35"},
  };
  return kDefaults;
}

Config::Config() : values_(defaults()) {}

void Config::set(const std::string& key, const std::string& value) {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    throw_error(ErrorCode::InvalidArgument, "unknown configuration key '" + key + "'");
  }
  it->second = value;
  overridden_.insert(key);
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

}  // namespace

void Config::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_error(ErrorCode::MissingInput, "cannot open config file '" + path + "'");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw_error(ErrorCode::Parse, path + ":" + std::to_string(lineno) +
                                        ": expected 'key = value'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw_error(ErrorCode::Parse, path + ":" + std::to_string(lineno) + ": empty key");
    }
    try {
      set(key, value);
    } catch (const RecipError& e) {
      throw_error(ErrorCode::Parse,
                  path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

const std::string& Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    throw_error(ErrorCode::Internal, "configuration key '" + key + "' does not exist");
  }
  return it->second;
}

bool Config::has(const std::string& key) const noexcept {
  return values_.find(key) != values_.end();
}

double Config::get_double(const std::string& key) const {
  const std::string& s = get(key);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw_error(ErrorCode::InvalidArgument,
                "configuration key '" + key + "' is not a number ('" + s + "')");
  }
  return v;
}

std::int64_t Config::get_int(const std::string& key) const {
  const std::string& s = get(key);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw_error(ErrorCode::InvalidArgument,
                "configuration key '" + key + "' is not an integer ('" + s + "')");
  }
  return v;
}

std::uint64_t Config::get_uint(const std::string& key) const {
  const std::string& s = get(key);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw_error(ErrorCode::InvalidArgument,
                "configuration key '" + key + "' is not an unsigned integer ('" + s + "')");
  }
  return v;
}

bool Config::get_bool(const std::string& key) const {
  const std::string& s = get(key);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw_error(ErrorCode::InvalidArgument,
              "configuration key '" + key + "' is not a boolean ('" + s + "')");
}

std::vector<double> Config::get_double_list(const std::string& key) const {
  const std::string& s = get(key);
  std::vector<double> out;
  if (s.empty()) return out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == ',') {
      const std::string part = trim(s.substr(start, i - start));
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
      if (part.empty() || ec != std::errc() || ptr != part.data() + part.size()) {
        throw_error(ErrorCode::InvalidArgument,
                    "configuration key '" + key + "' has a malformed list entry ('" +
                        part + "')");
      }
      out.push_back(v);
      start = i + 1;
    }
  }
  return out;
}

bool Config::is_default(const std::string& key) const {
  return !overridden_.contains(key);
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) {
    // The worker count and output directory are execution infrastructure,
    // not analysis configuration: artifacts must be byte-identical across
    // thread counts and destination paths, and the canonical form (and its
    // hash) is stamped into every artifact.
    if (k == "threads" || k == "out") continue;
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  }
  return out;
}

std::uint64_t Config::hash() const { return fnv1a64(canonical()); }

}  // namespace recip
