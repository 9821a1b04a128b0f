// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#include "recip/windows.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>

#include "recip/csv.hpp"
#include "recip/error.hpp"
#include "recip/time_util.hpp"

namespace recip {

bool is_help_event(const Corpus& corpus, const Event& e) {
  if (e.kind != EventKind::Answer) return false;
  const std::uint32_t qi = corpus.question_event(e.parent);
  if (qi == Corpus::npos) return true;  // external/unknown post: still helping
  return corpus.events()[qi].user != e.user;
}

ObservationWindow build_window(const Corpus& corpus, std::uint32_t question_event,
                               std::int64_t half_length_s) {
  const auto& events = corpus.events();
  if (question_event >= events.size() ||
      events[question_event].kind != EventKind::Question) {
    throw_error(ErrorCode::InvalidArgument, "build_window needs a question event");
  }
  const Event& q = events[question_event];

  ObservationWindow w;
  w.id = corpus.post_names()[q.post];
  w.user = corpus.user_names()[q.user];
  w.t_question = q.timestamp;
  w.start = q.timestamp - half_length_s;
  w.end = q.timestamp + half_length_s;

  // Earliest qualifying answer: non-negative score, different author,
  // strictly after the question, inside the post period.
  for (std::uint32_t ai : corpus.answers_to(q.post)) {
    const Event& a = events[ai];
    if (a.timestamp > w.end) break;  // answers_to is time-sorted
    if (a.score < 0 || a.user == q.user || a.timestamp <= w.t_question) continue;
    w.treated = true;
    w.t_answer = a.timestamp;
    w.transition = a.timestamp;
    break;
  }

  // The asker's helping stream, bumped off timestamp collisions so every
  // event terminates its own interval row. A help landing exactly on the
  // window start is nudged inside; bumps cascading past the end are dropped.
  std::vector<std::int64_t> helps;
  for (std::uint32_t ei : corpus.events_of(q.user)) {
    const Event& e = events[ei];
    if (e.timestamp < w.start) continue;
    if (e.timestamp > w.end) break;  // events_of is time-sorted
    if (is_help_event(corpus, e)) helps.push_back(e.timestamp);
  }
  std::sort(helps.begin(), helps.end());
  std::int64_t last = w.start;  // rows live in (start, end]
  for (std::int64_t t : helps) {
    if (t <= last) t = last + 1;
    if (t > w.end) {
      ++w.dropped_help;
      continue;
    }
    w.help_times.push_back(t);
    last = t;
  }
  return w;
}

ObservationWindow assign_synthetic_transition(ObservationWindow control,
                                              const ObservationWindow& treated_partner) {
  if (control.treated || !treated_partner.treated || !treated_partner.t_answer) {
    throw_error(ErrorCode::InvalidArgument,
                "synthetic transition needs an untreated window and a treated partner");
  }
  const std::int64_t offset = *treated_partner.t_answer - treated_partner.t_question;
  if (offset <= 0 || control.t_question + offset > control.end) {
    throw_error(ErrorCode::InvalidArgument,
                "partner response offset falls outside the control window");
  }
  control.transition = control.t_question + offset;
  return control;
}

std::vector<std::string> interval_covariate_names(const ExpandSpec& spec,
                                                  const std::vector<std::string>& bin_labels) {
  std::vector<std::string> names = {"treatment", "phase_post_question",
                                    "treated_post_question", "phase_post_answer"};
  switch (spec.model) {
    case ExpandModel::Main:
      names.push_back("is_treated_active");
      break;
    case ExpandModel::ResponseTime:
      names.push_back("is_treated_active");
      names.push_back("rt_interaction_active");
      names.push_back("rt_interaction_postq");
      break;
    case ExpandModel::Bins:
      if (static_cast<int>(bin_labels.size()) != spec.n_bins) {
        throw_error(ErrorCode::InvalidArgument, "bin label count mismatch");
      }
      for (const std::string& label : bin_labels) {
        names.push_back("treated_active_bin_" + label);
      }
      break;
  }
  return names;
}

std::vector<IntervalRow> expand_to_intervals(const ObservationWindow& w,
                                             const ExpandSpec& spec) {
  if (!w.transition) {
    throw_error(ErrorCode::InvalidArgument,
                "window '" + w.id + "' has no phase transition; pair it first");
  }
  if (!(w.start < w.t_question && w.t_question < w.end)) {
    throw_error(ErrorCode::Internal, "window '" + w.id + "' has a degenerate phase layout");
  }
  const std::int64_t tr = *w.transition;
  if (tr <= w.t_question || tr > w.end) {
    throw_error(ErrorCode::Internal, "window '" + w.id + "' transition outside post period");
  }
  if (spec.model == ExpandModel::Bins && spec.bin_index >= spec.n_bins) {
    throw_error(ErrorCode::InvalidArgument, "bin index out of range");
  }

  // Cut set: all interior boundaries, integer seconds, strictly increasing.
  std::vector<std::int64_t> cuts;
  cuts.reserve(w.help_times.size() + 2);
  cuts.push_back(w.t_question);
  if (tr < w.end) cuts.push_back(tr);
  for (std::int64_t h : w.help_times) {
    if (h < w.end) cuts.push_back(h);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  cuts.push_back(w.end);

  const double inv_hour = 1.0 / static_cast<double>(kSecondsPerHour);
  auto hours = [&](std::int64_t t) {
    return static_cast<double>(t - w.start) * inv_hour;
  };

  const std::size_t p =
      spec.model == ExpandModel::Bins ? 4 + static_cast<std::size_t>(spec.n_bins)
      : spec.model == ExpandModel::ResponseTime ? 7
                                                : 5;

  std::vector<IntervalRow> rows;
  rows.reserve(cuts.size());
  std::size_t next_help = 0;
  std::int64_t row_start = w.start;
  for (std::int64_t cut : cuts) {
    IntervalRow row;
    row.start = hours(row_start);
    row.stop = hours(cut);
    while (next_help < w.help_times.size() && w.help_times[next_help] < cut) ++next_help;
    if (next_help < w.help_times.size() && w.help_times[next_help] == cut) {
      row.event = true;
      ++next_help;
    }

    // Indicators switch on for rows starting at or after the boundary, so a
    // boundary event (stop == cut) is attributed to the earlier phase.
    const double treatment = w.treated ? 1.0 : 0.0;
    const double post_q = row_start >= w.t_question ? 1.0 : 0.0;
    const double post_a = row_start >= tr ? 1.0 : 0.0;
    row.x.assign(p, 0.0);
    row.x[0] = treatment;
    row.x[1] = post_q;
    row.x[2] = treatment * post_q;
    row.x[3] = post_a;
    switch (spec.model) {
      case ExpandModel::Main:
        row.x[4] = treatment * post_a;
        break;
      case ExpandModel::ResponseTime:
        row.x[4] = treatment * post_a;
        row.x[5] = treatment * post_a * spec.rt_value;
        row.x[6] = treatment * post_q * spec.rt_value;
        break;
      case ExpandModel::Bins:
        if (spec.bin_index >= 0) {
          row.x[4 + static_cast<std::size_t>(spec.bin_index)] = treatment * post_a;
        }
        break;
    }
    rows.push_back(std::move(row));
    row_start = cut;
  }
  return rows;
}

void write_windows_csv(const std::vector<ObservationWindow>& windows, std::ostream& out,
                       const std::string& comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "window_id,user_id,start,t_question,t_answer,window_end,treated,"
         "transition,help_times\n";
  std::string helps;
  for (const ObservationWindow& w : windows) {
    helps.clear();
    for (std::size_t i = 0; i < w.help_times.size(); ++i) {
      if (i) helps.push_back('|');
      helps += std::to_string(w.help_times[i]);
    }
    out << csv_escape(w.id) << ',' << csv_escape(w.user) << ',' << w.start << ','
        << w.t_question << ',' << (w.t_answer ? std::to_string(*w.t_answer) : std::string())
        << ',' << w.end << ',' << (w.treated ? '1' : '0') << ','
        << (w.transition ? std::to_string(*w.transition) : std::string()) << ',' << helps
        << '\n';
  }
  if (!out) throw_error(ErrorCode::Io, "failed writing windows table");
}

namespace {

std::int64_t parse_i64_field(const std::string& s, std::size_t line, const char* field) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw_error(ErrorCode::Parse, "windows line " + std::to_string(line) + ", field '" +
                                      field + "': not an integer ('" + s + "')");
  }
  return v;
}

}  // namespace

std::vector<ObservationWindow> read_windows_csv(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> fields;
  if (!reader.next(fields)) {
    throw_error(ErrorCode::Parse, "windows file is empty (missing header)");
  }
  const std::vector<std::string> expected = {"window_id", "user_id",    "start",
                                             "t_question", "t_answer",  "window_end",
                                             "treated",    "transition", "help_times"};
  if (fields != expected) {
    throw_error(ErrorCode::Parse, "windows header mismatch on line " +
                                      std::to_string(reader.line()));
  }
  std::vector<ObservationWindow> out;
  while (reader.next(fields)) {
    const std::size_t line = reader.line();
    if (fields.size() != 9) {
      throw_error(ErrorCode::Parse,
                  "windows line " + std::to_string(line) + ": expected 9 fields");
    }
    ObservationWindow w;
    w.id = fields[0];
    w.user = fields[1];
    w.start = parse_i64_field(fields[2], line, "start");
    w.t_question = parse_i64_field(fields[3], line, "t_question");
    if (!fields[4].empty()) w.t_answer = parse_i64_field(fields[4], line, "t_answer");
    w.end = parse_i64_field(fields[5], line, "window_end");
    if (fields[6] != "0" && fields[6] != "1") {
      throw_error(ErrorCode::Parse,
                  "windows line " + std::to_string(line) + ", field 'treated': not 0/1");
    }
    w.treated = fields[6] == "1";
    if (!fields[7].empty()) w.transition = parse_i64_field(fields[7], line, "transition");
    for (const std::string& h : split_pipe(fields[8])) {
      w.help_times.push_back(parse_i64_field(h, line, "help_times"));
    }
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace recip
