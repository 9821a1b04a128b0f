// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "recip/design.hpp"
#include "recip/matching.hpp"
#include "recip/windows.hpp"

namespace recip {

// One bin of a descriptive curve over matched windows, on the shared window
// clock (hour 0 = window start).
struct CurvePoint {
  std::string series;          // "treated", "control", or "adoption"
  double bin_start_h = 0.0;
  double bin_end_h = 0.0;
  double rate = 0.0;           // events per window-hour; adoption: cumulative share
  double normalized_rate = 0.0;  // rate / series' pre-question average
  double ci_half_width = 0.0;  // 95% normal-approximation half-width
  std::size_t events = 0;      // raw count behind `rate` (not serialized)
  std::size_t windows = 0;     // exposure behind `rate`  (not serialized)
};

// Helping-rate curves for the treated and control sides of the matched
// pairs, plus the cumulative adoption (phase-switch) share. Windows must all
// share one length; bin_hours must divide it evenly-ish (the last bin
// absorbs any remainder). Controls are counted once per pair they appear in.
std::vector<CurvePoint> help_rate_curves(const std::vector<MatchedPair>& pairs,
                                         const WindowMap& windows, double bin_hours);

// curves.csv (series,bin_start_h,bin_end_h,rate,normalized_rate,ci_half_width).
void write_curves_csv(const std::vector<CurvePoint>& points, std::ostream& out,
                      const std::string& comment = std::string());

}  // namespace recip
