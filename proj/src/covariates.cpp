// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#include "recip/covariates.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>

#include "recip/csv.hpp"
#include "recip/error.hpp"
#include "recip/time_util.hpp"

namespace recip {

CovariateIndex::CovariateIndex(const Corpus& corpus, std::int64_t half_length_s)
    : corpus_(corpus), half_length_s_(half_length_s) {
  by_tag_.resize(corpus.tag_names().size());
  const auto& events = corpus.events();
  for (std::uint32_t i = 0; i < events.size(); ++i) {
    const Event& q = events[i];
    if (q.kind != EventKind::Question) continue;
    std::int64_t answered_at = -1;
    for (std::uint32_t ai : corpus.answers_to(q.post)) {
      const Event& a = events[ai];
      if (a.timestamp > q.timestamp + half_length_s_) break;
      if (a.score < 0 || a.user == q.user || a.timestamp <= q.timestamp) continue;
      answered_at = a.timestamp;
      break;
    }
    auto push = [&](TagHistory& h) {
      h.times.push_back(q.timestamp);  // events are time-sorted, so this stays ascending
      if (answered_at >= 0) h.answer_times.push_back(answered_at);
    };
    push(global_);
    if (!q.tags.empty()) push(by_tag_[q.tags[0]]);
  }
  // Answer arrivals interleave across questions; sort for binary search.
  std::sort(global_.answer_times.begin(), global_.answer_times.end());
  for (TagHistory& h : by_tag_) {
    std::sort(h.answer_times.begin(), h.answer_times.end());
  }
}

double CovariateIndex::tag_rate_before(std::uint32_t tag, std::int64_t cutoff) const {
  auto rate_from = [&](const TagHistory& h) -> double {
    const auto it = std::lower_bound(h.times.begin(), h.times.end(), cutoff);
    const std::size_t n = static_cast<std::size_t>(it - h.times.begin());
    if (n == 0) return -1.0;
    const auto ait =
        std::lower_bound(h.answer_times.begin(), h.answer_times.end(), cutoff);
    return static_cast<double>(ait - h.answer_times.begin()) / static_cast<double>(n);
  };
  const double r = rate_from(by_tag_[tag]);
  if (r >= 0.0) return r;
  const double g = rate_from(global_);
  // Cold start: nothing asked anywhere yet. 0.5 is the uninformative prior.
  return g >= 0.0 ? g : 0.5;
}

MatchingCovariates CovariateIndex::compute(std::uint32_t question_event,
                                           const ObservationWindow& window) const {
  const auto& events = corpus_.events();
  const Event& q = events[question_event];
  if (q.kind != EventKind::Question || corpus_.post_names()[q.post] != window.id) {
    throw_error(ErrorCode::InvalidArgument, "covariates: window/question mismatch");
  }

  MatchingCovariates cov;
  cov.window_id = window.id;
  cov.treated = window.treated;
  cov.calendar_year = utc_year(window.t_question);
  cov.top_tag = corpus_.tag_names()[q.tags[0]];

  const std::int64_t ws = window.start;
  cov.user_tenure =
      std::max(0.0, static_cast<double>(ws - corpus_.first_event_time(q.user)) /
                        static_cast<double>(kSecondsPerDay));

  const std::int64_t d30 = ws - 30 * kSecondsPerDay;
  const std::int64_t d7 = ws - 7 * kSecondsPerDay;
  for (std::uint32_t ei : corpus_.events_of(q.user)) {
    const Event& e = events[ei];
    if (e.timestamp >= ws) break;  // strictly before the window
    if (e.kind == EventKind::Question) {
      cov.asked_at += 1.0;
      if (e.timestamp >= d30) cov.asked_30d += 1.0;
      if (e.timestamp >= d7) cov.asked_7d += 1.0;
    } else if (is_help_event(corpus_, e)) {
      cov.help_at += 1.0;
      if (e.timestamp >= d30) cov.help_30d += 1.0;
      if (e.timestamp >= d7) cov.help_7d += 1.0;
    }
  }

  cov.tag_answer_rate = tag_rate_before(q.tags[0], ws);
  return cov;
}

TenureBuckets TenureBuckets::defaults() {
  TenureBuckets b;
  b.upper_days = {7, 30, 180, 365, 1095, 2190};
  b.labels = {"<1W", "1W-1M", "1-6M", "6-12M", "1-3Y", "3-6Y", ">6Y"};
  return b;
}

TenureBuckets TenureBuckets::from_boundaries(const std::vector<double>& upper_days) {
  if (upper_days.empty()) return defaults();
  TenureBuckets b;
  b.upper_days = upper_days;
  if (!std::is_sorted(b.upper_days.begin(), b.upper_days.end()) ||
      b.upper_days.front() <= 0.0) {
    throw_error(ErrorCode::InvalidArgument, "tenure boundaries must be positive ascending");
  }
  auto fmt = [](double d) {
    std::string s = format_fixed(d, 6);
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
    return s;
  };
  for (std::size_t i = 0; i <= b.upper_days.size(); ++i) {
    const std::string lo = i == 0 ? "0" : fmt(b.upper_days[i - 1]);
    if (i == b.upper_days.size()) {
      b.labels.push_back(">" + lo + "d");
    } else {
      b.labels.push_back("(" + lo + "," + fmt(b.upper_days[i]) + "]d");
    }
  }
  // First bucket includes zero tenure, i.e. [0, upper].
  b.labels[0] = "[0," + fmt(b.upper_days[0]) + "]d";
  return b;
}

std::size_t TenureBuckets::bucket_of(double tenure_days) const {
  if (!(tenure_days >= 0.0)) {
    throw_error(ErrorCode::InvalidArgument, "tenure must be non-negative");
  }
  for (std::size_t i = 0; i < upper_days.size(); ++i) {
    if (tenure_days <= upper_days[i]) return i;
  }
  return upper_days.size();
}

void write_covariates_csv(const std::vector<MatchingCovariates>& rows, std::ostream& out,
                          const std::string& comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "window_id,user_tenure,asked_at,help_at,asked_30d,help_30d,asked_7d,help_7d,"
         "tag_answer_rate,calendar_year,top_tag,treated\n";
  for (const MatchingCovariates& c : rows) {
    out << csv_escape(c.window_id) << ',' << format_fixed(c.user_tenure, 6) << ','
        << format_fixed(c.asked_at, 0) << ',' << format_fixed(c.help_at, 0) << ','
        << format_fixed(c.asked_30d, 0) << ',' << format_fixed(c.help_30d, 0) << ','
        << format_fixed(c.asked_7d, 0) << ',' << format_fixed(c.help_7d, 0) << ','
        << format_fixed(c.tag_answer_rate, 6) << ',' << c.calendar_year << ','
        << csv_escape(c.top_tag) << ',' << (c.treated ? '1' : '0') << '\n';
  }
  if (!out) throw_error(ErrorCode::Io, "failed writing covariates table");
}

namespace {

double parse_double_field(const std::string& s, std::size_t line, const char* field) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw_error(ErrorCode::Parse, "covariates line " + std::to_string(line) + ", field '" +
                                      field + "': not a number ('" + s + "')");
  }
  return v;
}

}  // namespace

std::vector<MatchingCovariates> read_covariates_csv(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> fields;
  if (!reader.next(fields)) {
    throw_error(ErrorCode::Parse, "covariates file is empty (missing header)");
  }
  const std::vector<std::string> expected = {
      "window_id", "user_tenure", "asked_at", "help_at",         "asked_30d",
      "help_30d",  "asked_7d",    "help_7d",  "tag_answer_rate", "calendar_year",
      "top_tag",   "treated"};
  if (fields != expected) {
    throw_error(ErrorCode::Parse,
                "covariates header mismatch on line " + std::to_string(reader.line()));
  }
  std::vector<MatchingCovariates> out;
  while (reader.next(fields)) {
    const std::size_t line = reader.line();
    if (fields.size() != 12) {
      throw_error(ErrorCode::Parse,
                  "covariates line " + std::to_string(line) + ": expected 12 fields");
    }
    MatchingCovariates c;
    c.window_id = fields[0];
    c.user_tenure = parse_double_field(fields[1], line, "user_tenure");
    c.asked_at = parse_double_field(fields[2], line, "asked_at");
    c.help_at = parse_double_field(fields[3], line, "help_at");
    c.asked_30d = parse_double_field(fields[4], line, "asked_30d");
    c.help_30d = parse_double_field(fields[5], line, "help_30d");
    c.asked_7d = parse_double_field(fields[6], line, "asked_7d");
    c.help_7d = parse_double_field(fields[7], line, "help_7d");
    c.tag_answer_rate = parse_double_field(fields[8], line, "tag_answer_rate");
    c.calendar_year =
        static_cast<int>(parse_double_field(fields[9], line, "calendar_year"));
    c.top_tag = fields[10];
    if (fields[11] != "0" && fields[11] != "1") {
      throw_error(ErrorCode::Parse,
                  "covariates line " + std::to_string(line) + ", field 'treated': not 0/1");
    }
    c.treated = fields[11] == "1";
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace recip
