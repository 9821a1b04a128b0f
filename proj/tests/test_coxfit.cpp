// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "recip/coxfit.hpp"
#include "recip/error.hpp"
#include "recip/parallel.hpp"
#include "recip/rng.hpp"
#include "oracles.hpp"

using namespace recip;

namespace {

struct Dataset {
  CoxRows rows;
  std::vector<oracle::Row> mirror;  // same data for the reference implementation
};

// Random counting-process data with deliberate tie clusters. Events snap to
// an integer grid half the time so Efron's correction actually engages.
Dataset random_dataset(std::uint64_t seed, std::size_t n, std::size_t p,
                       double event_prob = 0.45) {
  Rng rng(seed);
  Dataset d;
  for (std::size_t j = 0; j < p; ++j) d.rows.names.push_back("x" + std::to_string(j));
  for (std::size_t i = 0; i < n; ++i) {
    const double start = std::floor(rng.uniform01() * 6.0);
    double span = 0.5 + rng.uniform01() * 6.0;
    double stop = start + span;
    if (rng.uniform01() < 0.5) stop = std::floor(stop) + 1.0;  // tie cluster
    const bool event = rng.uniform01() < event_prob;
    std::vector<double> x(p);
    for (std::size_t j = 0; j < p; ++j) {
      x[j] = j % 2 == 0 ? rng.normal() : (rng.uniform01() < 0.5 ? 0.0 : 1.0);
    }
    d.rows.push_row("w" + std::to_string(i), start, stop, event, x);
    d.mirror.push_back({start, stop, event, x});
  }
  return d;
}

std::vector<double> random_beta(std::uint64_t seed, std::size_t p, double scale) {
  Rng rng(seed);
  std::vector<double> b(p);
  for (double& v : b) v = rng.normal() * scale;
  return b;
}

}  // namespace

TEST_CASE("evaluate matches an explicit risk-set walk") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    auto d = random_dataset(seed, 40 + seed, 1 + seed % 3);
    auto data = prepare(d.rows);
    REQUIRE(data.dropped.empty());
    for (double lambda : {0.0, 0.01, 0.5}) {
      auto beta = random_beta(seed * 31, data.p(), 0.5);
      auto lik = evaluate(data, beta, lambda, false);
      const double ref = oracle::efron_nll(d.mirror, beta, lambda);
      CHECK(lik.objective ==
            doctest::Approx(ref).epsilon(1e-10));
      // The unpenalized piece is the negated partial likelihood.
      double b2 = 0.0;
      for (double v : beta) b2 += v * v;
      CHECK(lik.loglik ==
            doctest::Approx(-(ref - 0.5 * lambda * b2)).epsilon(1e-10));
    }
  }
}

TEST_CASE("two-row likelihood agrees with the closed form") {
  CoxRows rows;
  rows.names = {"x"};
  rows.push_row("a", 0.0, 1.0, true, {1.0});
  rows.push_row("b", 0.0, 2.0, false, {0.0});
  auto data = prepare(rows);
  const double beta = std::log(2.0);
  auto lik = evaluate(data, {beta}, 0.0, false);
  // One event with both rows at risk: l = beta - log(e^beta + 1).
  CHECK(lik.loglik == doctest::Approx(beta - std::log(3.0)).epsilon(1e-14));
  CHECK(lik.objective == doctest::Approx(-lik.loglik).epsilon(1e-14));
}

TEST_CASE("the ridge penalty adds exactly half lambda beta squared") {
  auto d = random_dataset(77, 30, 2);
  auto data = prepare(d.rows);
  const std::vector<double> beta = {2.0, 0.0};
  auto base = evaluate(data, beta, 0.0, false);
  auto ridged = evaluate(data, beta, 0.01, false);
  CHECK(ridged.objective - base.objective == doctest::Approx(0.02).epsilon(1e-14));
  CHECK(ridged.loglik == base.loglik);
}

TEST_CASE("analytic derivatives match finite differences") {
  for (std::uint64_t seed = 3; seed <= 8; ++seed) {
    auto d = random_dataset(seed * 101, 25 + 2 * seed, 1 + seed % 3);
    auto data = prepare(d.rows);
    const double lambda = seed % 2 ? 0.005 : 0.0;
    auto beta = random_beta(seed, data.p(), 0.4);
    auto lik = evaluate(data, beta, lambda, true);
    auto f = [&](const std::vector<double>& b) {
      return oracle::efron_nll(d.mirror, b, lambda);
    };
    const auto g = oracle::fd_gradient(f, beta);
    const auto h = oracle::fd_hessian(f, beta);
    REQUIRE(lik.gradient.size() == data.p());
    REQUIRE(lik.hessian.size() == data.p() * data.p());
    for (std::size_t j = 0; j < data.p(); ++j) {
      CHECK(lik.gradient[j] == doctest::Approx(g[j]).epsilon(1e-6).scale(1.0));
    }
    for (std::size_t j = 0; j < data.p() * data.p(); ++j) {
      CHECK(lik.hessian[j] == doctest::Approx(h[j]).epsilon(1e-4).scale(1.0));
    }
  }
}

TEST_CASE("fit lands on the reference minimizer") {
  for (std::uint64_t seed = 11; seed <= 16; ++seed) {
    auto d = random_dataset(seed * 7, 22, 2, 0.5);
    auto data = prepare(d.rows);
    FitOptions opt;
    opt.penalizer = seed % 2 ? 0.01 : 0.0;
    opt.tol = 1e-10;
    auto res = fit(data, opt);
    REQUIRE(res.converged);

    auto f = [&](const std::vector<double>& b) {
      return oracle::efron_nll(d.mirror, b, opt.penalizer);
    };
    auto ref = oracle::minimize_fd(f, data.p());
    REQUIRE(res.coefficients.size() == data.p());
    for (std::size_t j = 0; j < data.p(); ++j) {
      CHECK(res.coefficients[j].coef == doctest::Approx(ref[j]).epsilon(1e-4).scale(1.0));
    }
    CHECK(res.objective <= f(ref) + 1e-9);
  }
}

TEST_CASE("the accepted objective trace decreases strictly") {
  auto d = random_dataset(5150, 60, 3);
  auto data = prepare(d.rows);
  FitOptions opt;
  opt.penalizer = 0.005;
  auto res = fit(data, opt);
  REQUIRE(res.converged);
  REQUIRE(res.objective_trace.size() >= 2);
  for (std::size_t i = 1; i < res.objective_trace.size(); ++i) {
    CHECK(res.objective_trace[i] < res.objective_trace[i - 1]);
  }
  CHECK(res.max_gradient < 10.0 * opt.tol * std::abs(res.log_likelihood));
}

TEST_CASE("shifting a covariate column never moves the likelihood") {
  auto d = random_dataset(31337, 45, 3);
  auto data = prepare(d.rows);
  FitOptions opt;
  opt.penalizer = 0.005;
  auto base = fit(data, opt);

  CoxRows shifted = d.rows;
  for (std::size_t i = 0; i < shifted.n(); ++i) shifted.x[i * 3 + 1] += 1000.0;
  auto res = fit(prepare(shifted), opt);
  CHECK(std::abs(res.log_likelihood - base.log_likelihood) < 1e-10);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(res.coefficients[j].coef ==
          doctest::Approx(base.coefficients[j].coef).epsilon(1e-8).scale(1.0));
  }
}

TEST_CASE("rescaling a column rescales its coefficient inversely") {
  auto d = random_dataset(424242, 50, 2);
  auto data = prepare(d.rows);
  FitOptions opt;  // lambda = 0: the penalty is not scale-free
  opt.tol = 1e-11;
  auto base = fit(data, opt);
  REQUIRE(base.converged);

  const double c = 8.0;
  CoxRows scaled = d.rows;
  for (std::size_t i = 0; i < scaled.n(); ++i) scaled.x[i * 2] *= c;
  auto res = fit(prepare(scaled), opt);
  REQUIRE(res.converged);
  CHECK(res.coefficients[0].coef ==
        doctest::Approx(base.coefficients[0].coef / c).epsilon(1e-6));
  CHECK(res.coefficients[1].coef == doctest::Approx(base.coefficients[1].coef).epsilon(1e-6));
}

TEST_CASE("results are bit-identical across worker caps") {
  auto d = random_dataset(999, 80, 3);
  auto data = prepare(d.rows);
  FitOptions opt;
  opt.penalizer = 0.005;
  set_max_threads(1);
  auto one = fit(data, opt);
  set_max_threads(4);
  auto four = fit(data, opt);
  set_max_threads(0);
  REQUIRE(one.coefficients.size() == four.coefficients.size());
  for (std::size_t j = 0; j < one.coefficients.size(); ++j) {
    CHECK(one.coefficients[j].coef == four.coefficients[j].coef);
    CHECK(one.coefficients[j].se == four.coefficients[j].se);
  }
  CHECK(one.objective == four.objective);
}

TEST_CASE("standard errors come from the inverse curvature") {
  auto d = random_dataset(616, 35, 2);
  auto data = prepare(d.rows);
  FitOptions opt;
  opt.penalizer = 0.01;
  opt.tol = 1e-11;
  auto res = fit(data, opt);
  REQUIRE(res.converged);
  std::vector<double> beta(data.p());
  for (std::size_t j = 0; j < data.p(); ++j) beta[j] = res.coefficients[j].coef;
  auto f = [&](const std::vector<double>& b) {
    return oracle::efron_nll(d.mirror, b, opt.penalizer);
  };
  const auto h = oracle::fd_hessian(f, beta);
  // Invert the 2x2 by hand.
  const double det = h[0] * h[3] - h[1] * h[2];
  REQUIRE(det > 0.0);
  CHECK(res.coefficients[0].se == doctest::Approx(std::sqrt(h[3] / det)).epsilon(1e-4));
  CHECK(res.coefficients[1].se == doctest::Approx(std::sqrt(h[0] / det)).epsilon(1e-4));
  // Derived columns of the estimate record.
  for (const auto& c : res.coefficients) {
    CHECK(c.hr == doctest::Approx(std::exp(c.coef)).epsilon(1e-12));
    CHECK(c.ci_lower < c.hr);
    CHECK(c.hr < c.ci_upper);
    CHECK(c.p >= 0.0);
    CHECK(c.p <= 1.0);
  }
}

TEST_CASE("baseline hazard jumps match the step sums") {
  auto d = random_dataset(2024, 40, 2);
  auto data = prepare(d.rows);
  FitOptions opt;
  opt.penalizer = 0.005;
  auto res = fit(data, opt);
  std::vector<double> beta(data.p());
  for (std::size_t j = 0; j < data.p(); ++j) beta[j] = res.coefficients[j].coef;
  auto bh = baseline_hazard(data, beta);
  REQUIRE(bh.times.size() == data.event_times.size());

  // Reference: cumulative sums of d_k / S0(t_k) over the centered design.
  double cum = 0.0;
  for (std::size_t k = 0; k < bh.times.size(); ++k) {
    const double t = bh.times[k];
    double s0 = 0.0;
    std::size_t deaths = 0;
    for (std::size_t i = 0; i < data.n(); ++i) {
      if (!(data.start[i] < t && t <= data.stop[i])) continue;
      double eta = 0.0;
      for (std::size_t j = 0; j < data.p(); ++j) eta += data.x[i * data.p() + j] * beta[j];
      s0 += std::exp(eta);
      if (data.event[i] && data.stop[i] == t) ++deaths;
    }
    cum += static_cast<double>(deaths) / s0;
    CHECK(bh.cumulative[k] == doctest::Approx(cum).epsilon(1e-12));
  }
  CHECK(bh.cumulative_at(bh.times.front() - 0.5) == 0.0);
  CHECK(bh.cumulative_at(bh.times.back() + 100.0) ==
        doctest::Approx(bh.cumulative.back()).epsilon(1e-15));
  const double mid = (bh.times.size() > 1) ? (bh.times[0] + bh.times[1]) / 2.0 : bh.times[0];
  CHECK(bh.cumulative_at(mid) == doctest::Approx(bh.cumulative[0]).epsilon(1e-15));
}

TEST_CASE("with no covariate signal the baseline is one over risk count") {
  CoxRows rows;
  rows.names = {"x"};
  // Four subjects, events at 1 and 2; x varies but beta = 0.
  rows.push_row("a", 0.0, 1.0, true, {0.3});
  rows.push_row("b", 0.0, 2.0, true, {-1.2});
  rows.push_row("c", 0.0, 3.0, false, {0.9});
  rows.push_row("d", 0.5, 2.5, false, {2.0});
  auto data = prepare(rows);
  auto bh = baseline_hazard(data, {0.0});
  REQUIRE(bh.times.size() == 2);
  CHECK(bh.cumulative[0] == doctest::Approx(1.0 / 4.0).epsilon(1e-15));
  CHECK(bh.cumulative[1] == doctest::Approx(1.0 / 4.0 + 1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("prepare validates and centers") {
  CoxRows rows;
  rows.names = {"varies", "flat"};
  rows.push_row("a", 0.0, 1.0, true, {1.0, 5.0});
  rows.push_row("b", 0.0, 2.0, false, {3.0, 5.0});
  auto data = prepare(rows);
  CHECK(data.names == std::vector<std::string>{"varies"});
  CHECK(data.dropped == std::vector<std::string>{"flat"});
  REQUIRE(data.centering.size() == 1);
  CHECK(data.centering[0] == doctest::Approx(2.0));
  CHECK(data.x[0] == doctest::Approx(-1.0));
  CHECK(data.x[1] == doctest::Approx(1.0));

  CoxRows no_events;
  no_events.names = {"x"};
  no_events.push_row("a", 0.0, 1.0, false, {1.0});
  no_events.push_row("b", 0.0, 2.0, false, {2.0});
  CHECK_THROWS_AS(prepare(no_events), RecipError);

  CoxRows all_flat;
  all_flat.names = {"x"};
  all_flat.push_row("a", 0.0, 1.0, true, {1.0});
  all_flat.push_row("b", 0.0, 2.0, false, {1.0});
  CHECK_THROWS_AS(prepare(all_flat), RecipError);

  CoxRows bad_span;
  bad_span.names = {"x"};
  bad_span.push_row("a", 2.0, 2.0, true, {1.0});
  bad_span.push_row("b", 0.0, 2.0, false, {0.0});
  CHECK_THROWS_AS(prepare(bad_span), RecipError);

  CoxRows drift;
  drift.names = {"x", "y"};
  CHECK_THROWS_AS(drift.push_row("a", 0.0, 1.0, true, {1.0}), RecipError);
}

TEST_CASE("risk sets respect half-open interval membership") {
  // A row ending exactly at an event time is at risk; one starting there is not.
  CoxRows rows;
  rows.names = {"x"};
  rows.push_row("ends_at_t", 0.0, 1.0, false, {1.0});
  rows.push_row("starts_at_t", 1.0, 2.0, false, {1.0});
  rows.push_row("event", 0.0, 1.0, true, {0.0});
  auto data = prepare(rows);
  auto lik = evaluate(data, {0.0}, 0.0, false);
  // Two rows at risk at t=1 (the event row and ends_at_t), not three.
  CHECK(lik.loglik == doctest::Approx(-std::log(2.0)).epsilon(1e-14));
}
