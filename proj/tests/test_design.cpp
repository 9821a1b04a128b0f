// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "recip/design.hpp"
#include "recip/error.hpp"
#include "recip/rng.hpp"
#include "oracles.hpp"

using namespace recip;

namespace {
constexpr std::int64_t kHour = 3600;
constexpr std::int64_t kMin = 60;
constexpr std::int64_t kH = 48 * kHour;

ObservationWindow window(const std::string& id, std::int64_t start, bool treated,
                         std::int64_t answer_offset_s,
                         std::vector<std::int64_t> help_offsets_s = {}) {
  ObservationWindow w;
  w.id = id;
  w.user = "u_" + id;
  w.start = start;
  w.t_question = start + kH;
  w.end = start + 2 * kH;
  w.treated = treated;
  if (treated) {
    w.t_answer = w.t_question + answer_offset_s;
    w.transition = w.t_answer;
  }
  for (std::int64_t off : help_offsets_s) w.help_times.push_back(start + off);
  return w;
}

MatchedPair pair_of(const std::string& t, const std::string& c) {
  MatchedPair p;
  p.treated_id = t;
  p.control_id = c;
  return p;
}

// A small matched universe: n pairs, each treated window answered at a
// distinct offset, both sides carrying a few helping events.
struct Universe {
  std::vector<ObservationWindow> windows;
  std::vector<MatchedPair> pairs;
  WindowMap map;
};

Universe make_universe(std::size_t n, std::uint64_t seed = 17) {
  Universe u;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string t = "t" + std::to_string(i), c = "c" + std::to_string(i);
    const std::int64_t answer = (5 + static_cast<std::int64_t>(rng.below(40))) * kMin;
    std::vector<std::int64_t> helps_t, helps_c;
    for (int k = 0; k < 3; ++k) {
      helps_t.push_back(1 + static_cast<std::int64_t>(rng.below(2 * kH - 2)));
      helps_c.push_back(1 + static_cast<std::int64_t>(rng.below(2 * kH - 2)));
    }
    std::sort(helps_t.begin(), helps_t.end());
    std::sort(helps_c.begin(), helps_c.end());
    helps_t.erase(std::unique(helps_t.begin(), helps_t.end()), helps_t.end());
    helps_c.erase(std::unique(helps_c.begin(), helps_c.end()), helps_c.end());
    u.windows.push_back(window(t, 1000000 * static_cast<std::int64_t>(i), true, answer, helps_t));
    u.windows.push_back(window(c, 2000000 * static_cast<std::int64_t>(i) + 500, false, 0, helps_c));
    u.pairs.push_back(pair_of(t, c));
  }
  u.map = index_windows(u.windows);
  return u;
}

}  // namespace

TEST_CASE("percentile interpolates like the reference") {
  Rng rng(2);
  for (int rep = 0; rep < 40; ++rep) {
    std::vector<double> v(1 + rng.below(30));
    for (double& x : v) x = rng.normal() * 10.0;
    for (double q : {0.0, 5.0, 37.5, 50.0, 95.0, 100.0}) {
      CHECK(percentile(v, q) ==
            doctest::Approx(oracle::percentile_type7(v, q)).epsilon(1e-12).scale(1.0));
    }
  }
  CHECK(percentile({42.0}, 73.0) == 42.0);
  CHECK_THROWS_AS(percentile({}, 50.0), RecipError);
  CHECK_THROWS_AS(percentile({1.0}, 101.0), RecipError);
}

TEST_CASE("winsorized z-scoring matches the reference and spares zeros") {
  Rng rng(3);
  for (int rep = 0; rep < 25; ++rep) {
    std::vector<double> v(20 + rng.below(60));
    for (double& x : v) x = rng.uniform01() < 0.2 ? 0.0 : rng.lognormal(0.0, 1.0);
    std::size_t nonzero = 0;
    for (double x : v) nonzero += x != 0.0;
    if (nonzero < 3) v[0] = 1.0, v[1] = 2.0, v[2] = 3.0;

    auto got = v;
    clip_and_standardize(got, 5.0, 95.0);
    const auto ref = oracle::clip_and_standardize_ref(v, 5.0, 95.0);
    REQUIRE(got.size() == ref.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i] == doctest::Approx(ref[i]).epsilon(1e-12).scale(1.0));
      if (v[i] == 0.0) CHECK(got[i] == 0.0);
    }
  }
  std::vector<double> constant = {3.0, 3.0, 3.0, 0.0};
  CHECK_THROWS_AS(clip_and_standardize(constant, 5.0, 95.0), RecipError);
  std::vector<double> too_few = {1.0, 0.0, 0.0};
  CHECK_THROWS_AS(clip_and_standardize(too_few, 5.0, 95.0), RecipError);
  std::vector<double> fine = {1.0, 2.0, 3.0};
  CHECK_THROWS_AS(clip_and_standardize(fine, 95.0, 5.0), RecipError);
}

TEST_CASE("default response-time bins cover one quarter hour to twelve hours") {
  const auto bins = default_rt_bins();
  REQUIRE(bins.size() == 7);
  CHECK(bins[0].label() == "(0,15]");
  CHECK(bins[2].label() == "(30,60]");
  CHECK(bins[6].label() == "(480,720]");
  CHECK(bin_of(bins, 0.0) == -1);     // bins are open below
  CHECK(bin_of(bins, 0.5) == 0);
  CHECK(bin_of(bins, 15.0) == 0);     // right-closed
  CHECK(bin_of(bins, 15.001) == 1);
  CHECK(bin_of(bins, 30.0) == 1);
  CHECK(bin_of(bins, 720.0) == 6);
  CHECK(bin_of(bins, 720.001) == -1);
  CHECK(bin_of(bins, -5.0) == -1);
}

TEST_CASE("window indexing refuses duplicates") {
  std::vector<ObservationWindow> ws = {window("a", 0, true, kHour),
                                       window("a", 5000, false, 0)};
  CHECK_THROWS_AS(index_windows(ws), RecipError);
}

TEST_CASE("assembly expands pairs in order, treated before control") {
  auto u = make_universe(3);
  DesignSpec spec;
  auto design = assemble_design(u.pairs, u.map, spec);
  CHECK(design.n_pairs_used == 3);
  CHECK(design.n_pairs_dropped == 0);
  REQUIRE(design.rows.names.size() == 5);
  CHECK(design.rows.names[0] == "treatment");
  CHECK(design.rows.names[4] == "is_treated_active");

  // Row ids must be pair blocks: t0:T+ t0:C+ t1:T+ ...
  std::vector<std::string> order;
  for (const std::string& id : design.rows.window_ids) {
    if (order.empty() || order.back() != id) order.push_back(id);
  }
  REQUIRE(order.size() == 6);
  CHECK(order[0] == "t0:T");
  CHECK(order[1] == "t0:C");
  CHECK(order[2] == "t1:T");
  CHECK(order[3] == "t1:C");
  CHECK(order[4] == "t2:T");
  CHECK(order[5] == "t2:C");

  // Treated rows carry treatment = 1, control rows 0.
  for (std::size_t i = 0; i < design.rows.n(); ++i) {
    const bool is_treated_row = design.rows.window_ids[i].back() == 'T';
    CHECK(design.rows.x[i * 5] == (is_treated_row ? 1.0 : 0.0));
  }
}

TEST_CASE("missing windows and swapped roles are refused") {
  auto u = make_universe(2);
  DesignSpec spec;
  auto bad = u.pairs;
  bad[0].control_id = "nope";
  CHECK_THROWS_AS(assemble_design(bad, u.map, spec), RecipError);
  auto swapped = u.pairs;
  std::swap(swapped[1].treated_id, swapped[1].control_id);
  CHECK_THROWS_AS(assemble_design(swapped, u.map, spec), RecipError);
}

TEST_CASE("subsampling keeps whole pairs and is seed-stable") {
  auto u = make_universe(20);
  DesignSpec spec;
  spec.subsample_pairs = 7;
  spec.seed = 99;
  auto design = assemble_design(u.pairs, u.map, spec);
  CHECK(design.n_pairs_used == 7);

  std::set<std::string> treated_seen, control_seen;
  for (const std::string& id : design.rows.window_ids) {
    const std::string base = id.substr(0, id.size() - 2);
    (id.back() == 'T' ? treated_seen : control_seen).insert(base);
  }
  CHECK(treated_seen.size() == 7);
  // Every subsampled pair contributes both sides, never a bare half.
  CHECK(treated_seen == control_seen);

  auto again = assemble_design(u.pairs, u.map, spec);
  CHECK(again.rows.window_ids == design.rows.window_ids);
  CHECK(again.rows.x == design.rows.x);

  spec.subsample_pairs = 500;  // larger than the pool keeps everything
  CHECK(assemble_design(u.pairs, u.map, spec).n_pairs_used == 20);
  spec.subsample_pairs = 0;
  CHECK(assemble_design(u.pairs, u.map, spec).n_pairs_used == 20);
}

TEST_CASE("response-time columns scale the interactions by one shared value per pair") {
  auto u = make_universe(30);
  DesignSpec spec;
  spec.model = DesignModel::ResponseTime;
  auto design = assemble_design(u.pairs, u.map, spec);
  REQUIRE(design.rows.names.size() == 7);

  // Recover each pair's standardized value from rows where x4 != 0, then
  // demand every row of the pair agrees on it, and controls stay all-zero.
  std::map<std::string, double> rt_of;
  const std::size_t p = 7;
  for (std::size_t i = 0; i < design.rows.n(); ++i) {
    const double* x = &design.rows.x[i * p];
    const std::string& id = design.rows.window_ids[i];
    if (id.back() == 'C') {
      CHECK(x[0] == 0.0);
      CHECK(x[2] == 0.0);
      CHECK(x[4] == 0.0);
      CHECK(x[5] == 0.0);
      CHECK(x[6] == 0.0);
      continue;
    }
    if (x[4] != 0.0) {
      const double r = x[5] / x[4];
      auto [it, fresh] = rt_of.emplace(id, r);
      if (!fresh) CHECK(it->second == doctest::Approx(r).epsilon(1e-15));
    }
  }
  REQUIRE(rt_of.size() == 30);
  for (std::size_t i = 0; i < design.rows.n(); ++i) {
    const double* x = &design.rows.x[i * p];
    const std::string& id = design.rows.window_ids[i];
    if (id.back() != 'T') continue;
    const double r = rt_of.at(id);
    CHECK(x[5] == doctest::Approx(x[4] * r).epsilon(1e-15).scale(1.0));
    CHECK(x[6] == doctest::Approx(x[2] * r).epsilon(1e-15).scale(1.0));
  }

  // Standardization: the per-pair values average to zero with unit spread.
  double mean = 0.0, var = 0.0;
  for (const auto& [id, r] : rt_of) mean += r;
  mean /= static_cast<double>(rt_of.size());
  for (const auto& [id, r] : rt_of) var += (r - mean) * (r - mean);
  var /= static_cast<double>(rt_of.size());
  CHECK(mean == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("bin designs drop pairs outside every bin and count the rest") {
  std::vector<ObservationWindow> ws = {
      window("t0", 0, true, 10 * kMin, {kH + kHour}),
      window("c0", 9000, false, 0, {kH + 2 * kHour}),
      window("t1", 20000, true, 20 * kMin, {kH + 3 * kHour}),
      window("c1", 30000, false, 0, {2 * kHour}),
      window("t2", 40000, true, 45 * kMin, {kH + 30 * kMin, kH + 5 * kHour}),
      window("c2", 50000, false, 0, {kHour}),
      window("t3", 60000, true, 800 * kMin, {kH + 10 * kHour}),  // beyond the last bin
      window("c3", 70000, false, 0, {3 * kHour}),
  };
  auto map = index_windows(ws);
  std::vector<MatchedPair> pairs = {pair_of("t0", "c0"), pair_of("t1", "c1"),
                                    pair_of("t2", "c2"), pair_of("t3", "c3")};
  DesignSpec spec;
  spec.model = DesignModel::Bins;
  auto design = assemble_design(pairs, map, spec);
  CHECK(design.n_pairs_used == 3);
  CHECK(design.n_pairs_dropped == 1);
  for (const std::string& id : design.rows.window_ids) {
    CHECK(id.substr(0, 2) != "t3");
  }
  REQUIRE(design.rows.names.size() == 4 + 7);

  // Each treated window activates exactly the column of its own bin.
  const std::size_t p = design.rows.p();
  const std::map<std::string, std::size_t> expected_bin = {
      {"t0:T", 0}, {"t1:T", 1}, {"t2:T", 2}};
  for (std::size_t i = 0; i < design.rows.n(); ++i) {
    const double* x = &design.rows.x[i * p];
    const std::string& id = design.rows.window_ids[i];
    for (std::size_t j = 4; j < p; ++j) {
      if (id.back() == 'T' && j == 4 + expected_bin.at(id)) {
        CHECK(x[j] == x[0] * x[3]);
      } else {
        CHECK(x[j] == 0.0);
      }
    }
  }
}

TEST_CASE("the joint bin fit reports estimates only for populated bins") {
  auto u = make_universe(40, 5);
  // Push every pair's answer into one of two bins: (0,15] or (30,60].
  for (auto& w : u.windows) {
    if (!w.treated) continue;
    const bool fast = std::hash<std::string>{}(w.id) % 2 == 0;
    w.t_answer = w.t_question + (fast ? 10 : 45) * kMin;
    w.transition = w.t_answer;
  }
  u.map = index_windows(u.windows);
  DesignSpec spec;
  FitOptions opts;
  opts.penalizer = 0.05;
  auto result = run_bins(u.pairs, u.map, spec, opts);
  CHECK(result.n_pairs_used == 40);
  CHECK(result.n_pairs_dropped == 0);
  REQUIRE(result.entries.size() == 7);
  std::size_t populated = 0, estimated = 0, total_pairs = 0;
  for (const auto& e : result.entries) {
    total_pairs += e.n_pairs;
    populated += e.n_pairs > 0;
    estimated += e.estimated;
    if (e.n_pairs > 0) CHECK(e.estimated);
    if (e.estimated) {
      const auto* c = result.fit.find("treated_active_bin_" + e.bin.label());
      REQUIRE(c != nullptr);
      CHECK(c->coef == e.estimate.coef);
    }
  }
  CHECK(populated == 2);
  CHECK(estimated == 2);
  CHECK(total_pairs == 40);
}

TEST_CASE("sweeping by account age equals fitting each restriction by hand") {
  auto u = make_universe(24, 9);
  const auto buckets = TenureBuckets::defaults();
  // Tenures: spread the treated windows over three buckets; controls get
  // arbitrary values (the sweep buckets by the treated side only).
  std::vector<MatchingCovariates> covs;
  const double tenure_per_bucket[3] = {3.0, 200.0, 3000.0};
  for (std::size_t i = 0; i < u.pairs.size(); ++i) {
    MatchingCovariates t, c;
    t.window_id = u.pairs[i].treated_id;
    t.user_tenure = tenure_per_bucket[i % 3];
    c.window_id = u.pairs[i].control_id;
    c.user_tenure = 9999.0;
    covs.push_back(t);
    covs.push_back(c);
  }
  DesignSpec spec;
  FitOptions opts;
  opts.penalizer = 0.05;
  auto entries = run_tenure_sweep(u.pairs, u.map, covs, buckets, spec, opts);
  REQUIRE(entries.size() == buckets.size());

  std::size_t with_pairs = 0;
  for (std::size_t b = 0; b < buckets.size(); ++b) {
    std::vector<MatchedPair> subset;
    for (std::size_t i = 0; i < u.pairs.size(); ++i) {
      if (buckets.bucket_of(tenure_per_bucket[i % 3]) == b) subset.push_back(u.pairs[i]);
    }
    CHECK(entries[b].n_pairs == subset.size());
    if (subset.empty()) {
      CHECK(!entries[b].ok);
      CHECK(entries[b].error == "no pairs in bucket");
      continue;
    }
    ++with_pairs;
    REQUIRE(entries[b].ok);
    auto manual = fit(prepare(assemble_design(subset, u.map, spec).rows), opts);
    REQUIRE(entries[b].fit.coefficients.size() == manual.coefficients.size());
    for (std::size_t j = 0; j < manual.coefficients.size(); ++j) {
      CHECK(entries[b].fit.coefficients[j].coef == manual.coefficients[j].coef);
      CHECK(entries[b].fit.coefficients[j].se == manual.coefficients[j].se);
    }
  }
  CHECK(with_pairs == 3);
}

TEST_CASE("the naive contrast covers post-question time for every window") {
  std::vector<ObservationWindow> ws = {
      window("t0", 0, true, 10 * kMin, {kH + kHour, kH + 2 * kHour}),
      window("c0", 9000, false, 0, {kHour, kH + 5 * kHour}),  // one help pre-question
  };
  auto rows = assemble_naive_postquestion(ws);
  REQUIRE(rows.names == std::vector<std::string>{"treatment"});

  // t0: two post-question helps -> two event rows + trailing censored row.
  // c0: the pre-question help is ignored, one event row + trailing row.
  REQUIRE(rows.n() == 5);
  CHECK(rows.window_ids[0] == "t0");
  CHECK(rows.start[0] == doctest::Approx(48.0));
  CHECK(rows.stop[0] == doctest::Approx(49.0));
  CHECK(rows.event[0] == 1);
  CHECK(rows.stop[1] == doctest::Approx(50.0));
  CHECK(rows.event[1] == 1);
  CHECK(rows.stop[2] == doctest::Approx(96.0));
  CHECK(rows.event[2] == 0);
  CHECK(rows.x[0] == 1.0);
  CHECK(rows.window_ids[3] == "c0");
  CHECK(rows.start[3] == doctest::Approx(48.0));
  CHECK(rows.stop[3] == doctest::Approx(53.0));
  CHECK(rows.event[3] == 1);
  CHECK(rows.x[3 * 1] == 0.0);
  CHECK(rows.stop[4] == doctest::Approx(96.0));
  CHECK(rows.event[4] == 0);
}
