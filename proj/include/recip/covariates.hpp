// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "recip/events.hpp"
#include "recip/windows.hpp"

namespace recip {

// Pre-window user features used for matching. Everything is measured
// strictly before the window start, so treatment status cannot leak in.
struct MatchingCovariates {
  std::string window_id;
  double user_tenure = 0.0;      // days from the user's first event, floored at 0
  double asked_at = 0.0;         // questions asked before window start
  double help_at = 0.0;          // helping answers before window start
  double asked_30d = 0.0;        // same, restricted to the prior 30 days
  double help_30d = 0.0;
  double asked_7d = 0.0;         // ... prior 7 days
  double help_7d = 0.0;
  double tag_answer_rate = 0.0;  // share of the tag's earlier questions answered in time
  int calendar_year = 0;         // year of the question (exact-match stratum)
  std::string top_tag;           // first tag of the question (exact-match stratum)
  bool treated = false;

  friend bool operator==(const MatchingCovariates&, const MatchingCovariates&) = default;
};

// Precomputed lookup structures over one corpus. The half-length defines
// "answered in time" for the tag answer rate.
class CovariateIndex {
 public:
  CovariateIndex(const Corpus& corpus, std::int64_t half_length_s);

  // `question_event` indexes corpus.events(); `window` is its built window.
  MatchingCovariates compute(std::uint32_t question_event,
                             const ObservationWindow& window) const;

 private:
  struct TagHistory {
    std::vector<std::int64_t> times;         // question times, ascending
    // Arrival time of each answered-in-time question's earliest qualifying
    // answer, ascending. An answered question only counts toward the rate
    // once its answer has actually landed, so the rate never sees the future.
    std::vector<std::int64_t> answer_times;
  };
  double tag_rate_before(std::uint32_t tag, std::int64_t cutoff) const;

  const Corpus& corpus_;
  std::int64_t half_length_s_;
  std::vector<TagHistory> by_tag_;  // indexed by tag id
  TagHistory global_;               // fallback when a tag has no history yet
};

// Right-closed account-age buckets. The default set spans <1W to >6Y.
struct TenureBuckets {
  std::vector<double> upper_days;  // ascending; last bucket is open-ended
  std::vector<std::string> labels; // size = upper_days.size() + 1

  static TenureBuckets defaults();
  // Custom boundaries get "(a,b]d" style labels.
  static TenureBuckets from_boundaries(const std::vector<double>& upper_days);

  std::size_t size() const noexcept { return labels.size(); }
  // Index of the bucket containing tenure_days (boundaries right-closed).
  // Negative tenure throws InvalidArgument.
  std::size_t bucket_of(double tenure_days) const;
};

// covariates.csv round-trip.
void write_covariates_csv(const std::vector<MatchingCovariates>& rows, std::ostream& out,
                          const std::string& comment = std::string());
std::vector<MatchingCovariates> read_covariates_csv(std::istream& in);

}  // namespace recip
