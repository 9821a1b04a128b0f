// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "recip/error.hpp"
#include "recip/rng.hpp"
#include "recip/windows.hpp"
#include "test_util.hpp"

using namespace recip;
using testutil::CorpusBuilder;

namespace {
constexpr std::int64_t kHour = 3600;
constexpr std::int64_t kH = 48 * kHour;
constexpr std::int64_t kT0 = 1577836800;

ObservationWindow make_window(std::int64_t start, bool treated,
                              std::int64_t transition_offset_s,
                              std::vector<std::int64_t> help_offsets_s) {
  ObservationWindow w;
  w.id = "w";
  w.user = "u";
  w.start = start;
  w.t_question = start + kH;
  w.end = start + 2 * kH;
  w.treated = treated;
  if (transition_offset_s > 0) {
    w.transition = w.t_question + transition_offset_s;
    if (treated) w.t_answer = w.transition;
  }
  for (std::int64_t off : help_offsets_s) w.help_times.push_back(start + off);
  return w;
}
}  // namespace

TEST_CASE("build_window picks the earliest qualifying answer") {
  auto corpus = CorpusBuilder()
                    .question("asker", "q1", kT0 + 4 * kH, {"t"})
                    .answer("other", "a_neg", "q1", kT0 + 4 * kH + kHour, -2)
                    .answer("asker", "a_self", "q1", kT0 + 4 * kH + 2 * kHour, 5)
                    .answer("other", "a_ok", "q1", kT0 + 4 * kH + 3 * kHour, 0)
                    .answer("third", "a_later", "q1", kT0 + 4 * kH + 4 * kHour, 9)
                    .build(kT0, kT0 + 8 * kH);
  auto w = build_window(corpus, 0, kH);
  CHECK(w.treated);
  REQUIRE(w.t_answer.has_value());
  CHECK(*w.t_answer == kT0 + 4 * kH + 3 * kHour);  // negative score and self skipped
  CHECK(w.transition == w.t_answer);
  CHECK(w.start == kT0 + 3 * kH);
  CHECK(w.end == kT0 + 5 * kH);
}

TEST_CASE("an answer exactly at the window end still treats") {
  auto corpus = CorpusBuilder()
                    .question("asker", "q1", kT0 + 4 * kH, {"t"})
                    .answer("other", "a1", "q1", kT0 + 5 * kH)
                    .build(kT0, kT0 + 8 * kH);
  auto w = build_window(corpus, 0, kH);
  CHECK(w.treated);
  CHECK(*w.t_answer == w.end);
}

TEST_CASE("an answer just past the end leaves the window untreated") {
  auto corpus = CorpusBuilder()
                    .question("asker", "q1", kT0 + 4 * kH, {"t"})
                    .answer("other", "a1", "q1", kT0 + 5 * kH + 1)
                    .build(kT0, kT0 + 8 * kH);
  auto w = build_window(corpus, 0, kH);
  CHECK(!w.treated);
  CHECK(!w.t_answer.has_value());
  CHECK(!w.transition.has_value());
}

TEST_CASE("help stream keeps the asker's answers to other posts only") {
  auto corpus = CorpusBuilder()
                    .question("asker", "q1", kT0 + 4 * kH, {"t"})
                    .answer("asker", "h_ext", "ghost", kT0 + 4 * kH + kHour)  // orphan: helps
                    .question("other", "q2", kT0 + 4 * kH + 2 * kHour, {"t"})
                    .answer("asker", "h_q2", "q2", kT0 + 4 * kH + 3 * kHour)
                    .answer("asker", "h_self", "q1", kT0 + 4 * kH + 4 * kHour)  // self: not help
                    .answer("asker", "h_before", "ghost2", kT0 + kH)            // before start
                    .build(kT0, kT0 + 8 * kH);
  auto w = build_window(corpus, corpus.question_event(0), kH);
  REQUIRE(w.help_times.size() == 2);
  CHECK(w.help_times[0] == kT0 + 4 * kH + kHour);
  CHECK(w.help_times[1] == kT0 + 4 * kH + 3 * kHour);
  CHECK(w.dropped_help == 0);
}

TEST_CASE("colliding help timestamps bump forward one second") {
  const std::int64_t t = kT0 + 4 * kH + kHour;
  auto corpus = CorpusBuilder()
                    .question("asker", "q1", kT0 + 4 * kH, {"t"})
                    .answer("asker", "h1", "g1", t)
                    .answer("asker", "h2", "g2", t)
                    .answer("asker", "h3", "g3", t)
                    .answer("asker", "h4", "g4", kT0 + 3 * kH)  // exactly at window start
                    .build(kT0, kT0 + 8 * kH);
  auto w = build_window(corpus, corpus.question_event(0), kH);
  REQUIRE(w.help_times.size() == 4);
  CHECK(w.help_times[0] == kT0 + 3 * kH + 1);  // nudged inside the half-open window
  CHECK(w.help_times[1] == t);
  CHECK(w.help_times[2] == t + 1);
  CHECK(w.help_times[3] == t + 2);
}

TEST_CASE("bumps cascading past the end are counted and dropped") {
  const std::int64_t end = kT0 + 5 * kH;
  auto corpus = CorpusBuilder()
                    .question("asker", "q1", kT0 + 4 * kH, {"t"})
                    .answer("asker", "h1", "g1", end)
                    .answer("asker", "h2", "g2", end)
                    .answer("asker", "h3", "g3", end)
                    .build(kT0, kT0 + 8 * kH);
  auto w = build_window(corpus, corpus.question_event(0), kH);
  REQUIRE(w.help_times.size() == 1);
  CHECK(w.help_times[0] == end);
  CHECK(w.dropped_help == 2);
}

TEST_CASE("synthetic transitions copy the partner's response offset") {
  auto treated = make_window(0, true, 4 * kHour, {});
  auto control = make_window(1000 * kHour, false, 0, {});
  auto assigned = assign_synthetic_transition(control, treated);
  REQUIRE(assigned.transition.has_value());
  CHECK(*assigned.transition - assigned.t_question == 4 * kHour);
  CHECK(!assigned.treated);
  CHECK(!assigned.t_answer.has_value());

  CHECK_THROWS_AS(assign_synthetic_transition(treated, treated), RecipError);
  CHECK_THROWS_AS(assign_synthetic_transition(control, control), RecipError);
}

TEST_CASE("expansion of a plain treated window yields the three phase rows") {
  auto w = make_window(0, true, 4 * kHour, {});
  auto rows = expand_to_intervals(w, ExpandSpec{});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].start == doctest::Approx(0.0));
  CHECK(rows[0].stop == doctest::Approx(48.0));
  CHECK(rows[1].stop == doctest::Approx(52.0));
  CHECK(rows[2].stop == doctest::Approx(96.0));
  CHECK(rows[0].x == std::vector<double>{1, 0, 0, 0, 0});
  CHECK(rows[1].x == std::vector<double>{1, 1, 1, 0, 0});
  CHECK(rows[2].x == std::vector<double>{1, 1, 1, 1, 1});
  for (const auto& r : rows) CHECK(!r.event);
}

TEST_CASE("a help time splits the post phase into an event row") {
  auto w = make_window(0, true, 4 * kHour, {70 * kHour});
  auto rows = expand_to_intervals(w, ExpandSpec{});
  REQUIRE(rows.size() == 4);
  CHECK(rows[2].start == doctest::Approx(52.0));
  CHECK(rows[2].stop == doctest::Approx(70.0));
  CHECK(rows[2].event);
  CHECK(rows[3].start == doctest::Approx(70.0));
  CHECK(rows[3].stop == doctest::Approx(96.0));
  CHECK(!rows[3].event);
  CHECK(rows[3].x == std::vector<double>{1, 1, 1, 1, 1});
}

TEST_CASE("a help exactly on the transition lands in the earlier phase") {
  auto w = make_window(0, true, 4 * kHour, {52 * kHour});
  auto rows = expand_to_intervals(w, ExpandSpec{});
  REQUIRE(rows.size() == 3);  // the duplicate cut collapses
  CHECK(rows[1].stop == doctest::Approx(52.0));
  CHECK(rows[1].event);
  CHECK(rows[1].x[3] == 0.0);  // still pre-answer
  CHECK(rows[2].x[3] == 1.0);
}

TEST_CASE("a transition at the window end emits no post-phase row") {
  auto w = make_window(0, true, kH, {});
  auto rows = expand_to_intervals(w, ExpandSpec{});
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].stop == doctest::Approx(96.0));
  CHECK(rows[1].x[3] == 0.0);
}

TEST_CASE("expansion without a transition refuses") {
  auto w = make_window(0, false, 0, {});
  CHECK_THROWS_AS(expand_to_intervals(w, ExpandSpec{}), RecipError);
}

TEST_CASE("control rows zero every treatment-linked column") {
  auto w = make_window(0, false, 7 * kHour, {50 * kHour, 80 * kHour});
  for (ExpandModel m : {ExpandModel::Main, ExpandModel::ResponseTime, ExpandModel::Bins}) {
    ExpandSpec spec;
    spec.model = m;
    spec.rt_value = 1.7;
    spec.bin_index = 1;
    spec.n_bins = 3;
    auto rows = expand_to_intervals(w, spec);
    for (const auto& r : rows) {
      CHECK(r.x[0] == 0.0);
      CHECK(r.x[2] == 0.0);
      for (std::size_t j = 4; j < r.x.size(); ++j) CHECK(r.x[j] == 0.0);
    }
    // Phase indicators still flip for controls.
    CHECK(rows.back().x[1] == 1.0);
    CHECK(rows.back().x[3] == 1.0);
  }
}

TEST_CASE("response-time columns are exact multiples of the base interactions") {
  auto w = make_window(0, true, 4 * kHour, {20 * kHour, 50 * kHour, 60 * kHour});
  ExpandSpec spec;
  spec.model = ExpandModel::ResponseTime;
  spec.rt_value = -0.73;
  auto rows = expand_to_intervals(w, spec);
  for (const auto& r : rows) {
    REQUIRE(r.x.size() == 7);
    CHECK(r.x[5] == doctest::Approx(r.x[4] * spec.rt_value).epsilon(1e-15));
    CHECK(r.x[6] == doctest::Approx(r.x[2] * spec.rt_value).epsilon(1e-15));
  }
}

TEST_CASE("bin expansion activates only the window's own bin") {
  auto w = make_window(0, true, 4 * kHour, {});
  ExpandSpec spec;
  spec.model = ExpandModel::Bins;
  spec.n_bins = 4;
  spec.bin_index = 2;
  auto rows = expand_to_intervals(w, spec);
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) {
    REQUIRE(r.x.size() == 8);
    CHECK(r.x[4] == 0.0);
    CHECK(r.x[5] == 0.0);
    CHECK(r.x[6] == r.x[0] * r.x[3]);  // the active bin tracks treated x post-answer
    CHECK(r.x[7] == 0.0);
  }
  spec.bin_index = -1;  // out-of-bin window: no active column at all
  for (const auto& r : expand_to_intervals(w, spec)) {
    for (std::size_t j = 4; j < r.x.size(); ++j) CHECK(r.x[j] == 0.0);
  }
  spec.bin_index = 4;
  CHECK_THROWS_AS(expand_to_intervals(w, spec), RecipError);
}

TEST_CASE("covariate names follow the model layout") {
  ExpandSpec spec;
  auto names = interval_covariate_names(spec, {});
  REQUIRE(names.size() == 5);
  CHECK(names[0] == "treatment");
  CHECK(names[4] == "is_treated_active");

  spec.model = ExpandModel::ResponseTime;
  names = interval_covariate_names(spec, {});
  REQUIRE(names.size() == 7);
  CHECK(names[5] == "rt_interaction_active");
  CHECK(names[6] == "rt_interaction_postq");

  spec.model = ExpandModel::Bins;
  spec.n_bins = 2;
  names = interval_covariate_names(spec, {"(0,15]", "(15,30]"});
  REQUIRE(names.size() == 6);
  CHECK(names[4] == "treated_active_bin_(0,15]");
  CHECK(names[5] == "treated_active_bin_(15,30]");
  CHECK_THROWS_AS(interval_covariate_names(spec, {"(0,15]"}), RecipError);
}

TEST_CASE("random windows satisfy the expansion invariants") {
  Rng rng(20260819);
  for (int rep = 0; rep < 400; ++rep) {
    const std::int64_t start = kT0 + static_cast<std::int64_t>(rng.below(1000000));
    const bool treated = rng.uniform01() < 0.5;
    const std::int64_t offset = 1 + static_cast<std::int64_t>(rng.below(kH));
    std::vector<std::int64_t> helps;
    const std::size_t n_help = rng.below(6);
    std::int64_t last = 0;
    for (std::size_t i = 0; i < n_help; ++i) {
      last += 1 + static_cast<std::int64_t>(rng.below(2 * kH / 6));
      if (last <= 2 * kH) helps.push_back(last);
    }
    auto w = make_window(start, treated, offset, helps);
    auto rows = expand_to_intervals(w, ExpandSpec{});

    double covered = 0.0;
    std::size_t events = 0;
    double prev_stop = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      CHECK(r.start == doctest::Approx(prev_stop).epsilon(1e-12));
      CHECK(r.stop > r.start);
      covered += r.stop - r.start;
      events += r.event ? 1 : 0;
      if (i) {  // phase indicators never turn back off
        CHECK(r.x[1] >= rows[i - 1].x[1]);
        CHECK(r.x[3] >= rows[i - 1].x[3]);
      }
      CHECK(r.x[3] <= r.x[1]);
      prev_stop = r.stop;
    }
    CHECK(covered == doctest::Approx(96.0).epsilon(1e-9));
    CHECK(events == w.help_times.size());
  }
}

TEST_CASE("paired windows share their phase geometry") {
  Rng rng(7);
  for (int rep = 0; rep < 50; ++rep) {
    const std::int64_t offset = 1 + static_cast<std::int64_t>(rng.below(kH));
    auto treated = make_window(0, true, offset, {});
    auto control =
        assign_synthetic_transition(make_window(5000 * kHour, false, 0, {}), treated);
    auto rt = expand_to_intervals(treated, ExpandSpec{});
    auto rc = expand_to_intervals(control, ExpandSpec{});
    REQUIRE(rt.size() == rc.size());
    for (std::size_t i = 0; i < rt.size(); ++i) {
      CHECK(rt[i].start == doctest::Approx(rc[i].start).epsilon(1e-12));
      CHECK(rt[i].stop == doctest::Approx(rc[i].stop).epsilon(1e-12));
      CHECK(rt[i].x[1] == rc[i].x[1]);
      CHECK(rt[i].x[3] == rc[i].x[3]);
    }
  }
}

TEST_CASE("windows survive a csv round trip") {
  std::vector<ObservationWindow> windows;
  windows.push_back(make_window(kT0, true, 4 * kHour, {10 * kHour, 60 * kHour}));
  windows.push_back(make_window(kT0 + 9000, false, 0, {}));
  windows.push_back(make_window(kT0 + 12345, false, 11 * kHour, {kH}));
  windows[2].id = "needs,\"quoting\"";
  std::ostringstream out;
  write_windows_csv(windows, out, "stage=test config=0");
  std::istringstream in(out.str());
  auto back = read_windows_csv(in);
  REQUIRE(back.size() == windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) CHECK(back[i] == windows[i]);
}

TEST_CASE("windows csv parser reports line and field") {
  const std::string header =
      "window_id,user_id,start,t_question,t_answer,window_end,treated,transition,help_times\n";
  {
    std::istringstream in(header + "w,u,xyz,1,,2,0,,\n");
    CHECK_THROWS_WITH_AS(read_windows_csv(in), doctest::Contains("start"), RecipError);
  }
  {
    std::istringstream in(header + "w,u,0,1,,2,7,,\n");
    CHECK_THROWS_WITH_AS(read_windows_csv(in), doctest::Contains("treated"), RecipError);
  }
  {
    std::istringstream in("bad,header\n");
    CHECK_THROWS_AS(read_windows_csv(in), RecipError);
  }
}
