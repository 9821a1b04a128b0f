// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#include "recip/report.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "recip/csv.hpp"
#include "recip/error.hpp"
#include "recip/time_util.hpp"

namespace recip {

std::vector<CurvePoint> help_rate_curves(const std::vector<MatchedPair>& pairs,
                                         const WindowMap& windows, double bin_hours) {
  if (!(bin_hours > 0)) throw_error(ErrorCode::InvalidArgument, "bin width must be positive");
  if (pairs.empty()) throw_error(ErrorCode::Numeric, "no pairs to report on");

  const auto find = [&](const std::string& id) -> const ObservationWindow& {
    const auto it = windows.find(id);
    if (it == windows.end()) {
      throw_error(ErrorCode::InvalidArgument, "pair references unknown window '" + id + "'");
    }
    return it->second;
  };

  const ObservationWindow& first = find(pairs.front().treated_id);
  const std::int64_t length_s = first.end - first.start;
  const double length_h = static_cast<double>(length_s) / 3600.0;
  const std::size_t n_bins =
      std::max<std::size_t>(1, static_cast<std::size_t>(length_h / bin_hours));

  auto bin_of_offset = [&](double offset_h) {
    std::size_t b = static_cast<std::size_t>(offset_h / bin_hours);
    return std::min(b, n_bins - 1);  // the last bin absorbs the right edge
  };

  std::vector<std::size_t> treated_counts(n_bins, 0), control_counts(n_bins, 0);
  std::vector<std::size_t> adopted(n_bins, 0);
  const double half_h = length_h / 2.0;

  for (const MatchedPair& p : pairs) {
    const ObservationWindow& tw = find(p.treated_id);
    const ObservationWindow& cw = find(p.control_id);
    if (tw.end - tw.start != length_s || cw.end - cw.start != length_s) {
      throw_error(ErrorCode::InvalidArgument,
                  "curves need windows of one shared length");
    }
    for (std::int64_t h : tw.help_times) {
      ++treated_counts[bin_of_offset(static_cast<double>(h - tw.start) / 3600.0)];
    }
    for (std::int64_t h : cw.help_times) {
      ++control_counts[bin_of_offset(static_cast<double>(h - cw.start) / 3600.0)];
    }
    if (tw.t_answer) {
      ++adopted[bin_of_offset(static_cast<double>(*tw.t_answer - tw.start) / 3600.0)];
    }
  }

  const double n = static_cast<double>(pairs.size());
  auto series_points = [&](const char* name, const std::vector<std::size_t>& counts) {
    // Pre-question average as the normalization baseline.
    double pre_events = 0.0, pre_hours = 0.0;
    for (std::size_t b = 0; b < n_bins; ++b) {
      const double lo = static_cast<double>(b) * bin_hours;
      const double hi = b + 1 == n_bins ? length_h : lo + bin_hours;
      if (hi <= half_h) {
        pre_events += static_cast<double>(counts[b]);
        pre_hours += (hi - lo);
      }
    }
    const double baseline = pre_hours > 0 ? pre_events / (n * pre_hours) : 0.0;

    std::vector<CurvePoint> pts;
    for (std::size_t b = 0; b < n_bins; ++b) {
      CurvePoint pt;
      pt.series = name;
      pt.bin_start_h = static_cast<double>(b) * bin_hours;
      pt.bin_end_h = b + 1 == n_bins ? length_h : pt.bin_start_h + bin_hours;
      pt.events = counts[b];
      pt.windows = pairs.size();
      const double width = pt.bin_end_h - pt.bin_start_h;
      pt.rate = static_cast<double>(counts[b]) / (n * width);
      pt.normalized_rate = baseline > 0 ? pt.rate / baseline : 0.0;
      // Poisson-count normal approximation on the rate scale.
      pt.ci_half_width = 1.959963984540054 *
                         std::sqrt(std::max(1.0, static_cast<double>(counts[b]))) /
                         (n * width);
      pts.push_back(std::move(pt));
    }
    return pts;
  };

  std::vector<CurvePoint> out = series_points("treated", treated_counts);
  const std::vector<CurvePoint> control = series_points("control", control_counts);
  out.insert(out.end(), control.begin(), control.end());

  // Cumulative adoption share over treated windows.
  std::size_t cum = 0;
  for (std::size_t b = 0; b < n_bins; ++b) {
    cum += adopted[b];
    CurvePoint pt;
    pt.series = "adoption";
    pt.bin_start_h = static_cast<double>(b) * bin_hours;
    pt.bin_end_h = b + 1 == n_bins ? length_h : pt.bin_start_h + bin_hours;
    pt.events = cum;
    pt.windows = pairs.size();
    const double share = static_cast<double>(cum) / n;
    pt.rate = share;
    pt.normalized_rate = share;
    pt.ci_half_width =
        1.959963984540054 * std::sqrt(std::max(share * (1.0 - share), 1e-12) / n);
    out.push_back(std::move(pt));
  }
  return out;
}

void write_curves_csv(const std::vector<CurvePoint>& points, std::ostream& out,
                      const std::string& comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "series,bin_start_h,bin_end_h,rate,normalized_rate,ci_half_width\n";
  for (const CurvePoint& p : points) {
    out << csv_escape(p.series) << ',' << format_fixed(p.bin_start_h, 6) << ','
        << format_fixed(p.bin_end_h, 6) << ',' << format_fixed(p.rate, 6) << ','
        << format_fixed(p.normalized_rate, 6) << ',' << format_fixed(p.ci_half_width, 6)
        << '\n';
  }
  if (!out) throw_error(ErrorCode::Io, "failed writing curves table");
}

}  // namespace recip
