// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Turns matched pairs plus their windows into fit-ready interval designs:
// the main five-covariate model, the response-time interaction model, the
// discrete response-time-bin model, per-tenure-bucket sweeps, and the
// deliberately naive unmatched contrast.

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "recip/covariates.hpp"
#include "recip/coxfit.hpp"
#include "recip/matching.hpp"
#include "recip/windows.hpp"

namespace recip {

using WindowMap = std::unordered_map<std::string, ObservationWindow>;
WindowMap index_windows(const std::vector<ObservationWindow>& windows);

// Linear-interpolation percentile (the common "type 7" definition);
// q in [0, 100]. The input need not be sorted.
double percentile(std::vector<double> values, double q);

// Winsorize to [p_lo, p_hi] of the *nonzero* entries, then z-score using the
// mean/sd (population) of the nonzero clipped entries. Structural zeros stay
// exactly zero. Throws RecipError{Numeric} when the clip range or spread
// degenerates.
void clip_and_standardize(std::vector<double>& values, double p_lo, double p_hi);

// Right-closed response-time bin in minutes: lower < rt <= upper.
struct RtBin {
  double lower_minutes = 0.0;
  double upper_minutes = 0.0;
  std::string label() const;  // e.g. "(30,60]"
};
std::vector<RtBin> default_rt_bins();  // (0,15] ... (480,720]
// Index of the bin containing rt, or -1 when outside every bin.
int bin_of(const std::vector<RtBin>& bins, double rt_minutes);

enum class DesignModel : std::uint8_t { Main, ResponseTime, Bins };

struct DesignSpec {
  DesignModel model = DesignModel::Main;
  double clip_lo = 5.0, clip_hi = 95.0;        // RT winsorization percentiles
  std::vector<RtBin> bins = default_rt_bins();
  // Deterministic pair subsample; 0 = keep everything. Sampling keeps whole
  // pairs so treated/control structure survives.
  std::size_t subsample_pairs = 0;
  std::uint64_t seed = 0;
};

struct AssembledDesign {
  CoxRows rows;                      // uncentered; run prepare() before fit()
  std::size_t n_pairs_used = 0;
  std::size_t n_pairs_dropped = 0;   // Bins only: response time beyond the last bin
};

// Expands every pair's treated and control window. Control windows receive
// the partner's synthetic transition here. Rows appear in pair order,
// treated before control. Throws when a pair references a missing window or
// a treated window lacks an answer.
AssembledDesign assemble_design(const std::vector<MatchedPair>& pairs,
                                const WindowMap& windows, const DesignSpec& spec);

// Per-tenure-bucket refits of the main model (single shared bucket set;
// each stratum is its own design and fit). Buckets with no pairs or a
// failed fit report ok = false.
struct SweepEntry {
  std::string bucket;
  std::size_t n_pairs = 0;
  bool ok = false;
  std::string error;      // set when ok is false
  FitResult fit;          // valid when ok
};
std::vector<SweepEntry> run_tenure_sweep(const std::vector<MatchedPair>& pairs,
                                         const WindowMap& windows,
                                         const std::vector<MatchingCovariates>& covariates,
                                         const TenureBuckets& buckets,
                                         const DesignSpec& spec, const FitOptions& fit_opts);

// Joint fit with one treated-active indicator per response-time bin.
struct BinEntry {
  RtBin bin;
  std::size_t n_pairs = 0;
  bool estimated = false;  // false when the bin column was empty/dropped
  CoefficientEstimate estimate;
};
struct BinsResult {
  std::vector<BinEntry> entries;
  FitResult fit;
  std::size_t n_pairs_used = 0;
  std::size_t n_pairs_dropped = 0;
};
BinsResult run_bins(const std::vector<MatchedPair>& pairs, const WindowMap& windows,
                    const DesignSpec& spec, const FitOptions& fit_opts);

// The contrast a naive analysis would run: post-question exposure of every
// window (matched or not), a single `treatment` covariate, no pairing. Its
// estimate absorbs whatever activity differences treatment correlates with.
CoxRows assemble_naive_postquestion(const std::vector<ObservationWindow>& windows);

}  // namespace recip
