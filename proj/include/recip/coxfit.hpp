// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Proportional-hazards fitter for counting-process data: rows are
// (start, stop] exposure intervals with time-varying covariates, events may
// recur within a subject, and ties are handled with Efron's correction.
// The objective is the negative log partial likelihood plus an L2 ridge
// penalty 0.5 * lambda * |beta|^2, minimized by damped Newton iterations.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace recip {

// Raw design rows straight out of interval expansion. Not yet centered,
// indexed, or checked.
struct CoxRows {
  std::vector<std::string> names;        // covariate columns
  std::vector<std::string> window_ids;   // one id per row (diagnostics)
  std::vector<double> start, stop;       // hours; risk on (start, stop]
  std::vector<std::uint8_t> event;       // 1 when the row ends in an event
  std::vector<double> x;                 // row-major, n * names.size()

  std::size_t n() const noexcept { return start.size(); }
  std::size_t p() const noexcept { return names.size(); }
  void push_row(const std::string& id, double s, double e, bool ev,
                const std::vector<double>& covs);
};

// Fit-ready dataset: constant columns dropped, remaining columns centered on
// their means, and risk-set sweep indexes built. Row at risk at event time t
// iff start < t <= stop.
struct CoxDataset {
  std::vector<std::string> names;
  std::vector<std::string> dropped;      // removed constant columns
  std::vector<double> centering;         // mean subtracted from each kept column
  std::vector<std::string> window_ids;
  std::vector<double> start, stop;
  std::vector<std::uint8_t> event;
  std::vector<double> x;                 // centered, row-major

  std::vector<double> event_times;           // ascending, unique
  std::vector<std::uint32_t> death_offsets;  // K+1 prefix bounds into death_rows
  std::vector<std::uint32_t> death_rows;     // event rows grouped by event time
  std::vector<std::uint32_t> by_stop_desc;   // row order for risk-set entry
  std::vector<std::uint32_t> by_start_desc;  // row order for risk-set exit

  std::size_t n() const noexcept { return start.size(); }
  std::size_t p() const noexcept { return names.size(); }
  std::size_t n_events() const noexcept { return death_rows.size(); }
};

// Validates rows, drops constant columns, centers, and indexes.
// Throws RecipError{Numeric} when no events remain or no column varies,
// RecipError{InvalidArgument} on malformed rows (stop <= start, size drift).
CoxDataset prepare(const CoxRows& rows);

// One likelihood evaluation at a fixed coefficient vector.
struct Likelihood {
  double objective = 0.0;   // penalized negative log partial likelihood
  double loglik = 0.0;      // unpenalized log partial likelihood
  std::vector<double> gradient;  // of the objective; empty if derivatives skipped
  std::vector<double> hessian;   // row-major p*p; empty if derivatives skipped
  std::size_t clamped = 0;  // rows whose linear predictor hit the +/-30 clamp
};
Likelihood evaluate(const CoxDataset& data, const std::vector<double>& beta,
                    double penalizer, bool derivatives);

struct FitOptions {
  double penalizer = 0.0;
  double tol = 1e-7;     // relative objective change for convergence
  int max_iterations = 100;
};

struct CoefficientEstimate {
  std::string name;
  double coef = 0.0;
  double se = 0.0;        // from the penalized inverse Hessian
  double hr = 0.0;        // exp(coef)
  double ci_lower = 0.0;  // exp(coef -/+ 1.96 se)
  double ci_upper = 0.0;
  double p = 1.0;         // two-sided Wald
};

struct FitResult {
  std::vector<CoefficientEstimate> coefficients;
  std::vector<double> covariance;       // row-major p*p, penalized inverse Hessian
  double log_likelihood = 0.0;          // unpenalized, at the optimum
  double objective = 0.0;               // penalized negative log likelihood
  double max_gradient = 0.0;            // inf-norm of the objective gradient
  std::vector<double> objective_trace;  // accepted iterates, strictly decreasing
  int iterations = 0;
  bool converged = false;
  double penalizer = 0.0;
  std::size_t n_rows = 0;
  std::size_t n_events = 0;
  std::size_t clamped_rows = 0;
  std::vector<std::string> dropped;     // copied from the dataset

  const CoefficientEstimate* find(const std::string& name) const noexcept;
};

// Damped Newton with step halving; the objective decreases monotonically
// across accepted steps. Non-finite or non-descending Newton directions fall
// back to the negative gradient.
FitResult fit(const CoxDataset& data, const FitOptions& options);

// Breslow-style cumulative baseline hazard at the fitted coefficients:
// a step function with jumps d_k / S0(t_k) at each event time.
struct BaselineHazard {
  std::vector<double> times;       // ascending event times
  std::vector<double> cumulative;  // nondecreasing, same length
  double cumulative_at(double t) const noexcept;
};
BaselineHazard baseline_hazard(const CoxDataset& data, const std::vector<double>& beta);

}  // namespace recip
