// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "recip/events.hpp"

namespace recip {

// A four-phase observation window centered on one question:
//   pre  (start, t_question] | waiting (t_question, transition] | post (transition, end]
// Treated windows transition at their first qualifying answer; control
// windows get a synthetic transition copied from their matched partner's
// question-to-answer offset. All times are integer epoch seconds.
struct ObservationWindow {
  std::string id;        // the question's post id
  std::string user;      // the asker
  std::int64_t start = 0;
  std::int64_t t_question = 0;
  std::int64_t end = 0;
  bool treated = false;
  std::optional<std::int64_t> t_answer;    // earliest qualifying answer (treated only)
  std::optional<std::int64_t> transition;  // actual or synthetic phase switch
  // The asker's helping events inside [start, end], strictly increasing.
  // Collisions on the integer-second grid are bumped forward +1 s.
  std::vector<std::int64_t> help_times;
  std::uint32_t dropped_help = 0;          // bumped past `end` and removed

  friend bool operator==(const ObservationWindow&, const ObservationWindow&) = default;
};

// True when an answer event counts as the author "helping": answering a
// post they did not ask. Answers to the author's own questions are excluded
// everywhere (window event streams and covariate counts alike); answers to
// posts absent from the log count as help.
bool is_help_event(const Corpus& corpus, const Event& e);

// Builds the window for an eligible question event. The result has
// `transition == t_answer` when treated and no transition otherwise (it is
// assigned during pairing). Throws if the event is not a question.
ObservationWindow build_window(const Corpus& corpus, std::uint32_t question_event,
                               std::int64_t half_length_s);

// Copies the partner's question-to-answer offset onto a control window.
// The partner must be treated; offsets never exceed the half-length, so the
// synthetic transition stays inside (t_question, end].
ObservationWindow assign_synthetic_transition(ObservationWindow control,
                                              const ObservationWindow& treated_partner);

// ---------------------------------------------------------------------------
// Interval expansion: windows become counting-process rows. Each row spans
// (start, stop] hours measured from the window start; a row is an event row
// when it terminates at a helping timestamp. Boundary rule: an indicator
// switches on for rows *starting* at or after its cut, so a help exactly on
// a phase boundary belongs to the earlier phase.

enum class ExpandModel : std::uint8_t {
  Main,          // treatment, phase_post_question, treated_post_question,
                 // phase_post_answer, is_treated_active
  ResponseTime,  // Main + is_treated_active * rt and treated_post_question * rt
  Bins,          // first four Main columns + one treated-active indicator per bin
};

struct ExpandSpec {
  ExpandModel model = ExpandModel::Main;
  double rt_value = 0.0;  // standardized response-time regressor (ResponseTime)
  int bin_index = -1;     // this window's response-time bin (Bins); -1 = none
  int n_bins = 0;
};

struct IntervalRow {
  double start = 0.0;  // hours from window start
  double stop = 0.0;
  bool event = false;
  std::vector<double> x;  // covariates, layout fixed by the ExpandSpec model
};

// Covariate names for a model; bin columns take labels like "(30,60]".
std::vector<std::string> interval_covariate_names(const ExpandSpec& spec,
                                                  const std::vector<std::string>& bin_labels);

// Requires a transition. Rows partition (0, end-start] hours; cuts fall at
// the question, the transition, and every help time.
std::vector<IntervalRow> expand_to_intervals(const ObservationWindow& w,
                                             const ExpandSpec& spec);

// ---------------------------------------------------------------------------
// windows.csv: integer-second artifact that later stages re-expand from, so
// phase offsets stay exact instead of passing through decimal hours.

void write_windows_csv(const std::vector<ObservationWindow>& windows, std::ostream& out,
                       const std::string& comment = std::string());
std::vector<ObservationWindow> read_windows_csv(std::istream& in);

}  // namespace recip
