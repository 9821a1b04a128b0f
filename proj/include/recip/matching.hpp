// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "recip/covariates.hpp"

namespace recip {

// Feature order for the propensity model; mirrors MatchingCovariates.
inline constexpr std::size_t kPropensityFeatures = 8;
extern const std::array<const char*, kPropensityFeatures> kPropensityFeatureNames;

// Raw feature extraction (no transforms).
std::array<double, kPropensityFeatures> propensity_features(const MatchingCovariates& c);

// Logistic regression P(treated | features). Count features enter as
// log1p(count); every feature is then z-scored. Fitted by Newton/IRLS on the
// unpenalized likelihood.
struct PropensityModel {
  std::vector<std::string> feature_names;  // retained features, model order
  std::vector<bool> log1p_applied;         // per retained feature
  std::vector<double> means, sds;          // standardization, post-transform
  std::vector<double> coefficients;        // [0] = intercept, standardized scale
  std::vector<std::string> dropped;        // zero-variance features
  int iterations = 0;
  double log_likelihood = 0.0;
};

PropensityModel fit_propensity(const std::vector<MatchingCovariates>& rows);

// Score in (0, 1). Throws if the model is empty.
double propensity_score(const PropensityModel& model,
                        const std::array<double, kPropensityFeatures>& raw);

// One window as the matcher sees it.
struct ScoredWindow {
  std::string id;
  bool treated = false;
  double score = 0.0;
  int calendar_year = 0;
  std::string top_tag;
  double response_time_hours = 0.0;  // treated only; copied onto the pair
};

struct MatchedPair {
  std::string treated_id, control_id;
  double treated_score = 0.0, control_score = 0.0;
  double response_time_hours = 0.0;

  friend bool operator==(const MatchedPair&, const MatchedPair&) = default;
};

struct MatchStats {
  std::size_t treated = 0;
  std::size_t matched = 0;
  std::size_t unmatched_caliper = 0;  // nearest control farther than the caliper
  std::size_t unmatched_empty = 0;    // stratum had no controls at all
};

// Nearest-neighbor within exact (calendar_year, top_tag) strata, with
// replacement, caliper on |score difference|. Treated windows are processed
// in a seeded shuffled order; distance ties prefer the smaller control id.
// Pairs come back sorted by treated id.
std::vector<MatchedPair> match_windows(const std::vector<ScoredWindow>& windows,
                                       double caliper, std::uint64_t seed,
                                       MatchStats* stats = nullptr);

// Covariate balance before and after matching. The denominator in both
// columns is the unmatched pooled spread sqrt((var_T + var_C) / 2) with
// sample (n-1) variances, so the two columns are directly comparable.
struct BalanceRow {
  std::string feature;
  double treated_mean = 0.0, control_mean = 0.0;     // unmatched
  double smd_unmatched = 0.0;
  double matched_treated_mean = 0.0, matched_control_mean = 0.0;
  double smd_matched = 0.0;
  bool degenerate = false;  // zero pooled variance with unequal means
};

struct BalanceReport {
  std::vector<BalanceRow> rows;
  double worst_unmatched = 0.0;  // max |smd| over non-degenerate features
  double worst_matched = 0.0;
  std::size_t n_pairs = 0;
  std::size_t n_treated = 0, n_control = 0;  // unmatched group sizes
};

BalanceReport balance_report(const std::vector<MatchedPair>& pairs,
                             const std::vector<MatchingCovariates>& all_windows);

// pairs.csv round-trip.
void write_pairs_csv(const std::vector<MatchedPair>& pairs, std::ostream& out,
                     const std::string& comment = std::string());
std::vector<MatchedPair> read_pairs_csv(std::istream& in);

}  // namespace recip
