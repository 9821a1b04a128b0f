// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#include "recip/coxfit.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "recip/error.hpp"

namespace recip {

namespace {

constexpr double kEtaClamp = 30.0;  // exp(30) ~ 1e13 keeps sums finite
constexpr double kZ95 = 1.959963984540054;  // Phi^{-1}(0.975)

double two_sided_p(double z) {
  return std::erfc(std::abs(z) / 1.4142135623730951);
}

}  // namespace

void CoxRows::push_row(const std::string& id, double s, double e, bool ev,
                       const std::vector<double>& covs) {
  if (covs.size() != names.size()) {
    throw_error(ErrorCode::Internal, "covariate count mismatch on row push");
  }
  window_ids.push_back(id);
  start.push_back(s);
  stop.push_back(e);
  event.push_back(ev ? 1 : 0);
  x.insert(x.end(), covs.begin(), covs.end());
}

CoxDataset prepare(const CoxRows& rows) {
  const std::size_t n = rows.n();
  const std::size_t p_in = rows.p();
  if (n == 0) throw_error(ErrorCode::Numeric, "empty design: no interval rows");
  if (rows.stop.size() != n || rows.event.size() != n || rows.window_ids.size() != n ||
      rows.x.size() != n * p_in) {
    throw_error(ErrorCode::InvalidArgument, "design arrays have inconsistent lengths");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(rows.start[i] < rows.stop[i])) {
      throw_error(ErrorCode::InvalidArgument,
                  "interval row " + std::to_string(i) + " has stop <= start");
    }
    if (!std::isfinite(rows.start[i]) || !std::isfinite(rows.stop[i])) {
      throw_error(ErrorCode::InvalidArgument,
                  "interval row " + std::to_string(i) + " has non-finite bounds");
    }
  }

  CoxDataset d;
  d.window_ids = rows.window_ids;
  d.start = rows.start;
  d.stop = rows.stop;
  d.event = rows.event;

  // Drop columns that never vary (a centered constant column is all zeros
  // and would make the Hessian singular). Keep the original order.
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < p_in; ++j) {
    double lo = rows.x[j], hi = rows.x[j];
    for (std::size_t i = 1; i < n; ++i) {
      const double v = rows.x[i * p_in + j];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (!std::isfinite(lo) || !std::isfinite(hi)) {
      throw_error(ErrorCode::InvalidArgument,
                  "covariate '" + rows.names[j] + "' has non-finite values");
    }
    if (lo == hi) {
      d.dropped.push_back(rows.names[j]);
    } else {
      kept.push_back(j);
    }
  }
  if (kept.empty()) {
    throw_error(ErrorCode::Numeric, "no varying covariates after dropping constants");
  }
  const std::size_t p = kept.size();
  for (std::size_t j : kept) d.names.push_back(rows.names[j]);

  // Center on column means; mean-scale covariates keep the linear predictor
  // small and the baseline comparable across designs.
  d.centering.assign(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t jj = 0; jj < p; ++jj) {
      d.centering[jj] += rows.x[i * p_in + kept[jj]];
    }
  }
  for (double& c : d.centering) c /= static_cast<double>(n);
  d.x.resize(n * p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t jj = 0; jj < p; ++jj) {
      d.x[i * p + jj] = rows.x[i * p_in + kept[jj]] - d.centering[jj];
    }
  }

  // Unique event times and rows grouped by them.
  std::vector<double> times;
  for (std::size_t i = 0; i < n; ++i) {
    if (rows.event[i]) times.push_back(rows.stop[i]);
  }
  if (times.empty()) throw_error(ErrorCode::Numeric, "design contains no events");
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  d.event_times = std::move(times);

  const std::size_t K = d.event_times.size();
  std::vector<std::uint32_t> counts(K, 0);
  auto time_index = [&](double t) {
    const auto it = std::lower_bound(d.event_times.begin(), d.event_times.end(), t);
    return static_cast<std::size_t>(it - d.event_times.begin());
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (d.event[i]) ++counts[time_index(d.stop[i])];
  }
  d.death_offsets.assign(K + 1, 0);
  for (std::size_t k = 0; k < K; ++k) d.death_offsets[k + 1] = d.death_offsets[k] + counts[k];
  d.death_rows.assign(d.death_offsets[K], 0);
  std::vector<std::uint32_t> cursor(d.death_offsets.begin(), d.death_offsets.end() - 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (d.event[i]) d.death_rows[cursor[time_index(d.stop[i])]++] = static_cast<std::uint32_t>(i);
  }

  d.by_stop_desc.resize(n);
  std::iota(d.by_stop_desc.begin(), d.by_stop_desc.end(), 0);
  std::stable_sort(d.by_stop_desc.begin(), d.by_stop_desc.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return d.stop[a] > d.stop[b]; });
  d.by_start_desc.resize(n);
  std::iota(d.by_start_desc.begin(), d.by_start_desc.end(), 0);
  std::stable_sort(d.by_start_desc.begin(), d.by_start_desc.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return d.start[a] > d.start[b]; });
  return d;
}

namespace {

// Packed lower-triangular accumulator for symmetric rank-one updates.
inline void rank_update(std::vector<double>& tri, const double* xi, std::size_t p, double w) {
  std::size_t idx = 0;
  for (std::size_t a = 0; a < p; ++a) {
    const double wa = w * xi[a];
    for (std::size_t b = 0; b <= a; ++b) tri[idx++] += wa * xi[b];
  }
}

}  // namespace

Likelihood evaluate(const CoxDataset& data, const std::vector<double>& beta,
                    double penalizer, bool derivatives) {
  const std::size_t n = data.n();
  const std::size_t p = data.p();
  if (beta.size() != p) {
    throw_error(ErrorCode::InvalidArgument, "coefficient vector length mismatch");
  }
  const std::size_t tri_size = p * (p + 1) / 2;

  // Per-row linear predictors, computed once. The clamp keeps exp() finite;
  // clamped rows are counted and surfaced as a data-quality warning.
  std::vector<double> eta(n), wexp(n);
  std::size_t clamped = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double e = 0.0;
    const double* xi = &data.x[i * p];
    for (std::size_t j = 0; j < p; ++j) e += xi[j] * beta[j];
    if (e > kEtaClamp) {
      e = kEtaClamp;
      ++clamped;
    } else if (e < -kEtaClamp) {
      e = -kEtaClamp;
      ++clamped;
    }
    eta[i] = e;
    wexp[i] = std::exp(e);
  }

  // Sweep event times from the latest to the earliest, maintaining running
  // risk-set sums. Rows enter when stop >= t and leave when start >= t, so
  // membership is exactly {start < t <= stop}. All updates are sequential
  // and fixed-order: results are bit-identical across runs and thread counts.
  double S0 = 0.0;
  std::vector<double> S1(derivatives ? p : 0, 0.0);
  std::vector<double> S2(derivatives ? tri_size : 0, 0.0);
  std::vector<double> S1d(derivatives ? p : 0), S2d(derivatives ? tri_size : 0);

  double loglik = 0.0;
  std::vector<double> grad(derivatives ? p : 0, 0.0);
  std::vector<double> hess_tri(derivatives ? tri_size : 0, 0.0);
  std::vector<double> m(derivatives ? p : 0, 0.0);

  std::size_t add_ptr = 0, rem_ptr = 0;
  const std::size_t K = data.event_times.size();
  for (std::size_t kk = K; kk-- > 0;) {
    const double t = data.event_times[kk];
    while (add_ptr < n) {
      const std::uint32_t r = data.by_stop_desc[add_ptr];
      if (data.stop[r] < t) break;
      S0 += wexp[r];
      if (derivatives) {
        const double* xr = &data.x[r * p];
        for (std::size_t j = 0; j < p; ++j) S1[j] += wexp[r] * xr[j];
        rank_update(S2, xr, p, wexp[r]);
      }
      ++add_ptr;
    }
    while (rem_ptr < n) {
      const std::uint32_t r = data.by_start_desc[rem_ptr];
      if (data.start[r] < t) break;
      S0 -= wexp[r];
      if (derivatives) {
        const double* xr = &data.x[r * p];
        for (std::size_t j = 0; j < p; ++j) S1[j] -= wexp[r] * xr[j];
        rank_update(S2, xr, p, -wexp[r]);
      }
      ++rem_ptr;
    }

    const std::uint32_t beg = data.death_offsets[kk];
    const std::uint32_t end = data.death_offsets[kk + 1];
    const double d = static_cast<double>(end - beg);

    double S0d = 0.0;
    if (derivatives) {
      std::fill(S1d.begin(), S1d.end(), 0.0);
      std::fill(S2d.begin(), S2d.end(), 0.0);
    }
    for (std::uint32_t di = beg; di < end; ++di) {
      const std::uint32_t r = data.death_rows[di];
      loglik += eta[r];
      S0d += wexp[r];
      if (derivatives) {
        const double* xr = &data.x[r * p];
        for (std::size_t j = 0; j < p; ++j) {
          S1d[j] += wexp[r] * xr[j];
          grad[j] += xr[j];
        }
        rank_update(S2d, xr, p, wexp[r]);
      }
    }

    // Efron correction: the l-th tied event sees the risk set minus an l/d
    // share of the tied block.
    for (std::uint32_t l = 0; l < end - beg; ++l) {
      const double f = static_cast<double>(l) / d;
      const double phi = S0 - f * S0d;
      loglik -= std::log(phi);
      if (derivatives) {
        const double inv = 1.0 / phi;
        for (std::size_t j = 0; j < p; ++j) m[j] = (S1[j] - f * S1d[j]) * inv;
        for (std::size_t j = 0; j < p; ++j) grad[j] -= m[j];
        std::size_t idx = 0;
        for (std::size_t a = 0; a < p; ++a) {
          for (std::size_t b = 0; b <= a; ++b) {
            hess_tri[idx] -= (S2[idx] - f * S2d[idx]) * inv - m[a] * m[b];
            ++idx;
          }
        }
      }
    }
  }

  Likelihood out;
  out.loglik = loglik;
  out.clamped = clamped;
  double penalty = 0.0;
  for (std::size_t j = 0; j < p; ++j) penalty += beta[j] * beta[j];
  out.objective = -loglik + 0.5 * penalizer * penalty;
  if (!std::isfinite(out.objective)) {
    throw_error(ErrorCode::Numeric, "likelihood evaluation produced a non-finite value");
  }
  if (derivatives) {
    out.gradient.assign(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) out.gradient[j] = -grad[j] + penalizer * beta[j];
    out.hessian.assign(p * p, 0.0);
    std::size_t idx = 0;
    for (std::size_t a = 0; a < p; ++a) {
      for (std::size_t b = 0; b <= a; ++b) {
        const double v = -hess_tri[idx++] + (a == b ? penalizer : 0.0);
        out.hessian[a * p + b] = v;
        out.hessian[b * p + a] = v;
      }
    }
  }
  return out;
}

const CoefficientEstimate* FitResult::find(const std::string& name) const noexcept {
  for (const auto& c : coefficients) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

FitResult fit(const CoxDataset& data, const FitOptions& options) {
  const std::size_t p = data.p();
  if (options.tol <= 0 || options.max_iterations < 1 || options.penalizer < 0) {
    throw_error(ErrorCode::InvalidArgument, "bad fit options");
  }

  std::vector<double> beta(p, 0.0);
  Likelihood cur = evaluate(data, beta, options.penalizer, true);

  FitResult res;
  res.penalizer = options.penalizer;
  res.n_rows = data.n();
  res.n_events = data.n_events();
  res.dropped = data.dropped;
  res.objective_trace.push_back(cur.objective);

  int it = 0;
  bool converged = false;
  while (it < options.max_iterations) {
    ++it;
    Eigen::Map<const Eigen::MatrixXd> H(cur.hessian.data(), p, p);
    Eigen::Map<const Eigen::VectorXd> g(cur.gradient.data(), p);

    Eigen::VectorXd delta;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    bool newton_ok = ldlt.info() == Eigen::Success;
    if (newton_ok) {
      delta = ldlt.solve(-g);
      newton_ok = delta.allFinite() && g.dot(delta) < 0.0;  // must be a descent direction
    }
    if (!newton_ok) {
      // Ridge-less Hessians can be singular on degenerate data: fall back to
      // a plain gradient step, scaled to a unit-ish move.
      const double gn = g.norm();
      delta = gn > 0 ? Eigen::VectorXd(-g / gn) : Eigen::VectorXd::Zero(p);
    }

    double alpha = 1.0;
    bool accepted = false;
    std::vector<double> candidate(p);
    Likelihood next;
    for (int half = 0; half < 50; ++half) {
      for (std::size_t j = 0; j < p; ++j) candidate[j] = beta[j] + alpha * delta[j];
      next = evaluate(data, candidate, options.penalizer, false);
      if (next.objective < cur.objective) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;  // flat to machine precision

    const double prev_obj = cur.objective;
    beta = candidate;
    cur = evaluate(data, beta, options.penalizer, true);
    res.objective_trace.push_back(cur.objective);

    double ginf = 0.0;
    for (std::size_t j = 0; j < p; ++j) ginf = std::max(ginf, std::abs(cur.gradient[j]));
    const double rel = std::abs(prev_obj - cur.objective) /
                       std::max(1.0, std::abs(cur.objective));
    // Safety factor 0.5 keeps us comfortably inside the documented bound of
    // 10 * tol * |loglik| on the gradient inf-norm at the optimum.
    if (rel < options.tol &&
        ginf <= 5.0 * options.tol * std::max(std::abs(cur.loglik), 1e-3)) {
      converged = true;
      break;
    }
  }

  res.iterations = it;
  res.log_likelihood = cur.loglik;
  res.objective = cur.objective;
  res.clamped_rows = cur.clamped;
  double ginf = 0.0;
  for (std::size_t j = 0; j < p; ++j) ginf = std::max(ginf, std::abs(cur.gradient[j]));
  res.max_gradient = ginf;
  // A stalled line search at a (numerically) zero gradient is convergence,
  // not failure; it happens when the start point is already optimal.
  if (!converged && ginf <= 5.0 * options.tol * std::max(std::abs(cur.loglik), 1e-3)) {
    converged = true;
  }
  res.converged = converged;

  // Wald inference from the penalized observed information.
  Eigen::Map<const Eigen::MatrixXd> H(cur.hessian.data(), p, p);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(p, p);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
  if (ldlt.info() != Eigen::Success) {
    throw_error(ErrorCode::Numeric, "information matrix is not invertible at the optimum");
  }
  cov = ldlt.solve(cov);
  res.covariance.assign(cov.data(), cov.data() + p * p);

  res.coefficients.resize(p);
  for (std::size_t j = 0; j < p; ++j) {
    CoefficientEstimate& c = res.coefficients[j];
    c.name = data.names[j];
    c.coef = beta[j];
    const double v = cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw_error(ErrorCode::Numeric, "non-positive variance for '" + c.name + "'");
    }
    c.se = std::sqrt(v);
    c.hr = std::exp(c.coef);
    c.ci_lower = std::exp(c.coef - kZ95 * c.se);
    c.ci_upper = std::exp(c.coef + kZ95 * c.se);
    c.p = two_sided_p(c.coef / c.se);
  }
  return res;
}

double BaselineHazard::cumulative_at(double t) const noexcept {
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 0.0;
  return cumulative[static_cast<std::size_t>(it - times.begin()) - 1];
}

BaselineHazard baseline_hazard(const CoxDataset& data, const std::vector<double>& beta) {
  const std::size_t n = data.n();
  const std::size_t p = data.p();
  if (beta.size() != p) {
    throw_error(ErrorCode::InvalidArgument, "coefficient vector length mismatch");
  }
  std::vector<double> wexp(n);
  for (std::size_t i = 0; i < n; ++i) {
    double e = 0.0;
    const double* xi = &data.x[i * p];
    for (std::size_t j = 0; j < p; ++j) e += xi[j] * beta[j];
    wexp[i] = std::exp(std::clamp(e, -kEtaClamp, kEtaClamp));
  }

  const std::size_t K = data.event_times.size();
  std::vector<double> jumps(K, 0.0);
  double S0 = 0.0;
  std::size_t add_ptr = 0, rem_ptr = 0;
  for (std::size_t kk = K; kk-- > 0;) {
    const double t = data.event_times[kk];
    while (add_ptr < n && data.stop[data.by_stop_desc[add_ptr]] >= t) {
      S0 += wexp[data.by_stop_desc[add_ptr]];
      ++add_ptr;
    }
    while (rem_ptr < n && data.start[data.by_start_desc[rem_ptr]] >= t) {
      S0 -= wexp[data.by_start_desc[rem_ptr]];
      ++rem_ptr;
    }
    const double d = static_cast<double>(data.death_offsets[kk + 1] - data.death_offsets[kk]);
    jumps[kk] = d / S0;
  }

  BaselineHazard bh;
  bh.times = data.event_times;
  bh.cumulative.resize(K);
  double acc = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    acc += jumps[k];
    bh.cumulative[k] = acc;
  }
  return bh;
}

}  // namespace recip
