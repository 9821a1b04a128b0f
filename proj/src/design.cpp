// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#include "recip/design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "recip/error.hpp"
#include "recip/rng.hpp"
#include "recip/time_util.hpp"

namespace recip {

WindowMap index_windows(const std::vector<ObservationWindow>& windows) {
  WindowMap map;
  map.reserve(windows.size());
  for (const ObservationWindow& w : windows) {
    if (!map.emplace(w.id, w).second) {
      throw_error(ErrorCode::InvalidArgument, "duplicate window id '" + w.id + "'");
    }
  }
  return map;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw_error(ErrorCode::Numeric, "percentile of an empty set");
  if (!(q >= 0.0 && q <= 100.0)) {
    throw_error(ErrorCode::InvalidArgument, "percentile rank outside [0, 100]");
  }
  std::sort(values.begin(), values.end());
  const double h = (q / 100.0) * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

void clip_and_standardize(std::vector<double>& values, double p_lo, double p_hi) {
  if (!(p_lo >= 0 && p_lo < p_hi && p_hi <= 100)) {
    throw_error(ErrorCode::InvalidArgument, "bad winsorization percentiles");
  }
  std::vector<double> nonzero;
  nonzero.reserve(values.size());
  for (double v : values) {
    if (v != 0.0) nonzero.push_back(v);
  }
  if (nonzero.size() < 2) {
    throw_error(ErrorCode::Numeric, "winsorization needs at least two nonzero values");
  }
  const double lo = percentile(nonzero, p_lo);
  const double hi = percentile(nonzero, p_hi);
  if (!(lo < hi)) {
    throw_error(ErrorCode::Numeric, "degenerate winsorization bounds (no spread)");
  }
  double mean = 0.0;
  std::size_t n = 0;
  for (double& v : values) {
    if (v == 0.0) continue;
    v = std::clamp(v, lo, hi);
    mean += v;
    ++n;
  }
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : values) {
    if (v == 0.0) continue;
    var += (v - mean) * (v - mean);
  }
  var /= static_cast<double>(n);
  if (!(var > 0.0)) {
    throw_error(ErrorCode::Numeric, "zero spread after winsorization");
  }
  const double inv_sd = 1.0 / std::sqrt(var);
  for (double& v : values) {
    if (v != 0.0) v = (v - mean) * inv_sd;
  }
}

std::string RtBin::label() const {
  auto fmt = [](double m) {
    std::string s = std::to_string(static_cast<long long>(m + 0.5));
    return s;
  };
  return "(" + fmt(lower_minutes) + "," + fmt(upper_minutes) + "]";
}

std::vector<RtBin> default_rt_bins() {
  return {{0, 15}, {15, 30}, {30, 60}, {60, 120}, {120, 240}, {240, 480}, {480, 720}};
}

int bin_of(const std::vector<RtBin>& bins, double rt_minutes) {
  for (std::size_t i = 0; i < bins.size(); ++i) {
    if (rt_minutes > bins[i].lower_minutes && rt_minutes <= bins[i].upper_minutes) {
      return static_cast<int>(i);
    }
  }
  return -1;
}

namespace {

std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (k == 0 || k >= n) return idx;
  Rng rng(mix_seed(seed, fnv1a64("pair-subsample")));
  // Partial Fisher-Yates, then restore original pair order.
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

const ObservationWindow& window_or_throw(const WindowMap& windows, const std::string& id) {
  const auto it = windows.find(id);
  if (it == windows.end()) {
    throw_error(ErrorCode::InvalidArgument, "pair references unknown window '" + id + "'");
  }
  return it->second;
}

double pair_rt_hours(const ObservationWindow& treated) {
  if (!treated.treated || !treated.t_answer) {
    throw_error(ErrorCode::InvalidArgument,
                "window '" + treated.id + "' is not a treated window with an answer");
  }
  return static_cast<double>(*treated.t_answer - treated.t_question) /
         static_cast<double>(kSecondsPerHour);
}

}  // namespace

AssembledDesign assemble_design(const std::vector<MatchedPair>& pairs,
                                const WindowMap& windows, const DesignSpec& spec) {
  AssembledDesign out;

  const std::vector<std::size_t> use =
      subsample_indices(pairs.size(), spec.subsample_pairs, spec.seed);

  // Response-time regressor: log1p(hours from window start to the phase
  // switch), one value per pair, winsorized and standardized across pairs.
  std::vector<double> rt_values;
  if (spec.model == DesignModel::ResponseTime) {
    rt_values.reserve(use.size());
    for (std::size_t i : use) {
      const ObservationWindow& tw = window_or_throw(windows, pairs[i].treated_id);
      pair_rt_hours(tw);  // validates the window is treated with an answer
      const double from_start =
          static_cast<double>(*tw.transition - tw.start) / static_cast<double>(kSecondsPerHour);
      rt_values.push_back(std::log1p(from_start));
    }
    clip_and_standardize(rt_values, spec.clip_lo, spec.clip_hi);
  }

  std::vector<std::string> bin_labels;
  for (const RtBin& b : spec.bins) bin_labels.push_back(b.label());

  ExpandSpec ex;
  ex.model = spec.model == DesignModel::Main          ? ExpandModel::Main
             : spec.model == DesignModel::ResponseTime ? ExpandModel::ResponseTime
                                                        : ExpandModel::Bins;
  ex.n_bins = static_cast<int>(spec.bins.size());
  out.rows.names = interval_covariate_names(
      ex, spec.model == DesignModel::Bins ? bin_labels : std::vector<std::string>{});

  for (std::size_t uu = 0; uu < use.size(); ++uu) {
    const MatchedPair& pair = pairs[use[uu]];
    const ObservationWindow& tw = window_or_throw(windows, pair.treated_id);
    const ObservationWindow& cw_raw = window_or_throw(windows, pair.control_id);
    if (cw_raw.treated) {
      throw_error(ErrorCode::InvalidArgument,
                  "pair control '" + pair.control_id + "' is a treated window");
    }
    const ObservationWindow cw = assign_synthetic_transition(cw_raw, tw);

    if (spec.model == DesignModel::ResponseTime) {
      ex.rt_value = rt_values[uu];
    } else if (spec.model == DesignModel::Bins) {
      ex.bin_index = bin_of(spec.bins, pair_rt_hours(tw) * 60.0);
      if (ex.bin_index < 0) {
        ++out.n_pairs_dropped;
        continue;
      }
    }

    for (const IntervalRow& row : expand_to_intervals(tw, ex)) {
      out.rows.push_row(pair.treated_id + ":T", row.start, row.stop, row.event, row.x);
    }
    for (const IntervalRow& row : expand_to_intervals(cw, ex)) {
      out.rows.push_row(pair.treated_id + ":C", row.start, row.stop, row.event, row.x);
    }
    ++out.n_pairs_used;
  }
  return out;
}

std::vector<SweepEntry> run_tenure_sweep(const std::vector<MatchedPair>& pairs,
                                         const WindowMap& windows,
                                         const std::vector<MatchingCovariates>& covariates,
                                         const TenureBuckets& buckets,
                                         const DesignSpec& spec, const FitOptions& fit_opts) {
  std::unordered_map<std::string, double> tenure_by_id;
  tenure_by_id.reserve(covariates.size());
  for (const MatchingCovariates& c : covariates) tenure_by_id[c.window_id] = c.user_tenure;

  // Pairs are bucketed by the treated asker's account age.
  std::vector<std::vector<MatchedPair>> grouped(buckets.size());
  for (const MatchedPair& p : pairs) {
    const auto it = tenure_by_id.find(p.treated_id);
    if (it == tenure_by_id.end()) {
      throw_error(ErrorCode::InvalidArgument,
                  "no covariates for treated window '" + p.treated_id + "'");
    }
    grouped[buckets.bucket_of(it->second)].push_back(p);
  }

  std::vector<SweepEntry> entries;
  for (std::size_t b = 0; b < buckets.size(); ++b) {
    SweepEntry e;
    e.bucket = buckets.labels[b];
    e.n_pairs = grouped[b].size();
    if (grouped[b].empty()) {
      e.error = "no pairs in bucket";
      entries.push_back(std::move(e));
      continue;
    }
    try {
      DesignSpec stratum_spec = spec;
      stratum_spec.model = DesignModel::Main;
      const AssembledDesign design = assemble_design(grouped[b], windows, stratum_spec);
      const CoxDataset data = prepare(design.rows);
      e.fit = fit(data, fit_opts);
      e.ok = true;
    } catch (const RecipError& err) {
      e.error = err.what();
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

BinsResult run_bins(const std::vector<MatchedPair>& pairs, const WindowMap& windows,
                    const DesignSpec& spec, const FitOptions& fit_opts) {
  DesignSpec bins_spec = spec;
  bins_spec.model = DesignModel::Bins;

  BinsResult out;
  const AssembledDesign design = assemble_design(pairs, windows, bins_spec);
  out.n_pairs_used = design.n_pairs_used;
  out.n_pairs_dropped = design.n_pairs_dropped;
  const CoxDataset data = prepare(design.rows);
  out.fit = fit(data, fit_opts);

  // Per-bin pair counts, over the same (possibly subsampled) pairs the fit saw.
  std::vector<std::size_t> counts(bins_spec.bins.size(), 0);
  for (std::size_t i :
       subsample_indices(pairs.size(), bins_spec.subsample_pairs, bins_spec.seed)) {
    const auto it = windows.find(pairs[i].treated_id);
    if (it == windows.end()) continue;
    const int b = bin_of(bins_spec.bins, pair_rt_hours(it->second) * 60.0);
    if (b >= 0) ++counts[static_cast<std::size_t>(b)];
  }

  for (std::size_t b = 0; b < bins_spec.bins.size(); ++b) {
    BinEntry e;
    e.bin = bins_spec.bins[b];
    e.n_pairs = counts[b];
    const std::string name = "treated_active_bin_" + e.bin.label();
    if (const CoefficientEstimate* c = out.fit.find(name)) {
      e.estimated = true;
      e.estimate = *c;
    }
    out.entries.push_back(std::move(e));
  }
  return out;
}

CoxRows assemble_naive_postquestion(const std::vector<ObservationWindow>& windows) {
  CoxRows rows;
  rows.names = {"treatment"};
  std::vector<double> x(1);
  for (const ObservationWindow& w : windows) {
    x[0] = w.treated ? 1.0 : 0.0;
    const double t_q = static_cast<double>(w.t_question - w.start) /
                       static_cast<double>(kSecondsPerHour);
    const double end = static_cast<double>(w.end - w.start) /
                       static_cast<double>(kSecondsPerHour);
    double row_start = t_q;
    for (std::int64_t h : w.help_times) {
      if (h <= w.t_question) continue;
      const double stop = static_cast<double>(h - w.start) /
                          static_cast<double>(kSecondsPerHour);
      rows.push_row(w.id, row_start, stop, true, x);
      row_start = stop;
    }
    if (row_start < end) rows.push_row(w.id, row_start, end, false, x);
  }
  return rows;
}

}  // namespace recip
