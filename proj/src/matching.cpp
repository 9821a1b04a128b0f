// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#include "recip/matching.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <unordered_map>

#include "recip/csv.hpp"
#include "recip/error.hpp"
#include "recip/rng.hpp"

namespace recip {

const std::array<const char*, kPropensityFeatures> kPropensityFeatureNames = {
    "user_tenure", "asked_at", "help_at",  "asked_30d",
    "help_30d",    "asked_7d", "help_7d",  "tag_answer_rate"};

namespace {

// Count features are heavy-tailed; log1p before standardizing.
constexpr std::array<bool, kPropensityFeatures> kLog1p = {false, true, true, true,
                                                          true,  true, true, false};

double sigmoid(double eta) {
  if (eta >= 0) {
    const double z = std::exp(-eta);
    return 1.0 / (1.0 + z);
  }
  const double z = std::exp(eta);
  return z / (1.0 + z);
}

}  // namespace

std::array<double, kPropensityFeatures> propensity_features(const MatchingCovariates& c) {
  return {c.user_tenure, c.asked_at, c.help_at,       c.asked_30d,
          c.help_30d,    c.asked_7d, c.help_7d,       c.tag_answer_rate};
}

PropensityModel fit_propensity(const std::vector<MatchingCovariates>& rows) {
  const std::size_t n = rows.size();
  if (n < 2) throw_error(ErrorCode::Numeric, "propensity model needs at least two windows");
  bool any_treated = false, any_control = false;
  for (const auto& r : rows) (r.treated ? any_treated : any_control) = true;
  if (!any_treated || !any_control) {
    throw_error(ErrorCode::Numeric, "propensity model needs both treated and control windows");
  }

  // Transform, then standardize; constant features are dropped (the
  // intercept would absorb them anyway).
  std::vector<std::array<double, kPropensityFeatures>> feats(n);
  for (std::size_t i = 0; i < n; ++i) {
    feats[i] = propensity_features(rows[i]);
    for (std::size_t j = 0; j < kPropensityFeatures; ++j) {
      if (kLog1p[j]) feats[i][j] = std::log1p(feats[i][j]);
    }
  }

  PropensityModel model;
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < kPropensityFeatures; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += feats[i][j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = feats[i][j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    if (var <= 0.0) {
      model.dropped.push_back(kPropensityFeatureNames[j]);
      continue;
    }
    kept.push_back(j);
    model.feature_names.push_back(kPropensityFeatureNames[j]);
    model.log1p_applied.push_back(kLog1p[j]);
    model.means.push_back(mean);
    model.sds.push_back(std::sqrt(var));
  }
  if (kept.empty()) {
    throw_error(ErrorCode::Numeric, "all propensity features are constant");
  }

  const std::size_t p = kept.size() + 1;  // + intercept
  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    X(static_cast<Eigen::Index>(i), 0) = 1.0;
    for (std::size_t jj = 0; jj < kept.size(); ++jj) {
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(jj + 1)) =
          (feats[i][kept[jj]] - model.means[jj]) / model.sds[jj];
    }
    y(static_cast<Eigen::Index>(i)) = rows[i].treated ? 1.0 : 0.0;
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  double ll_prev = -std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < 100; ++it) {
    const Eigen::VectorXd eta = X * beta;
    Eigen::VectorXd mu(eta.size()), w(eta.size());
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      const double m = sigmoid(eta(i));
      mu(i) = m;
      w(i) = std::max(m * (1.0 - m), 1e-12);
      ll += y(i) > 0.5 ? std::log(std::max(m, 1e-300))
                       : std::log(std::max(1.0 - m, 1e-300));
    }
    const Eigen::VectorXd g = X.transpose() * (y - mu);
    if (g.lpNorm<Eigen::Infinity>() < 1e-10 && std::abs(ll - ll_prev) < 1e-12) {
      ll_prev = ll;
      break;
    }
    ll_prev = ll;
    const Eigen::MatrixXd H = X.transpose() * w.asDiagonal() * X;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    if (ldlt.info() != Eigen::Success) {
      throw_error(ErrorCode::Numeric, "propensity information matrix not invertible");
    }
    const Eigen::VectorXd step = ldlt.solve(g);
    if (!step.allFinite()) {
      throw_error(ErrorCode::Numeric, "propensity update diverged");
    }
    beta += step;
    if (beta.lpNorm<Eigen::Infinity>() > 30.0) {
      throw_error(ErrorCode::Numeric,
                  "propensity model separated (a standardized coefficient exceeds 30); "
                  "treatment is deterministically predictable from the features");
    }
  }

  model.coefficients.assign(beta.data(), beta.data() + p);
  model.iterations = it + 1;
  model.log_likelihood = ll_prev;
  return model;
}

double propensity_score(const PropensityModel& model,
                        const std::array<double, kPropensityFeatures>& raw) {
  if (model.coefficients.empty()) {
    throw_error(ErrorCode::InvalidArgument, "empty propensity model");
  }
  // Map retained feature names back onto the raw layout.
  double eta = model.coefficients[0];
  std::size_t jj = 0;
  for (std::size_t j = 0; j < kPropensityFeatures; ++j) {
    if (jj >= model.feature_names.size()) break;
    if (model.feature_names[jj] != kPropensityFeatureNames[j]) continue;
    double v = raw[j];
    if (model.log1p_applied[jj]) v = std::log1p(v);
    eta += model.coefficients[jj + 1] * (v - model.means[jj]) / model.sds[jj];
    ++jj;
  }
  return sigmoid(std::clamp(eta, -30.0, 30.0));
}

std::vector<MatchedPair> match_windows(const std::vector<ScoredWindow>& windows,
                                       double caliper, std::uint64_t seed,
                                       MatchStats* stats) {
  if (!(caliper > 0.0)) throw_error(ErrorCode::InvalidArgument, "caliper must be positive");

  struct Stratum {
    std::vector<const ScoredWindow*> treated;
    std::vector<const ScoredWindow*> controls;
  };
  // std::map keys give a deterministic stratum order.
  std::map<std::pair<int, std::string>, Stratum> strata;
  for (const ScoredWindow& w : windows) {
    Stratum& s = strata[{w.calendar_year, w.top_tag}];
    (w.treated ? s.treated : s.controls).push_back(&w);
  }

  MatchStats local;
  std::vector<MatchedPair> pairs;
  for (auto& [key, s] : strata) {
    local.treated += s.treated.size();
    if (s.controls.empty()) {
      local.unmatched_empty += s.treated.size();
      continue;
    }
    std::sort(s.controls.begin(), s.controls.end(),
              [](const ScoredWindow* a, const ScoredWindow* b) {
                if (a->score != b->score) return a->score < b->score;
                return a->id < b->id;
              });
    // Shuffled processing order: with replacement it does not change who
    // matches, but it pins the order pairs are emitted in before sorting
    // and mirrors how sensitive no-replacement matching would be run.
    std::sort(s.treated.begin(), s.treated.end(),
              [](const ScoredWindow* a, const ScoredWindow* b) { return a->id < b->id; });
    Rng rng(mix_seed(seed, fnv1a64(key.second) ^ static_cast<std::uint64_t>(key.first)));
    shuffle(s.treated, rng);

    for (const ScoredWindow* t : s.treated) {
      // Nearest control by |score difference|; candidates sit around the
      // insertion point of the treated score.
      const auto it = std::lower_bound(
          s.controls.begin(), s.controls.end(), t->score,
          [](const ScoredWindow* c, double v) { return c->score < v; });
      const ScoredWindow* best = nullptr;
      double best_d = std::numeric_limits<double>::infinity();
      auto consider = [&](const ScoredWindow* c) {
        const double d = std::abs(c->score - t->score);
        if (d < best_d || (d == best_d && best && c->id < best->id)) {
          best_d = d;
          best = c;
        }
      };
      // Walk right while ties/improvements are possible, then left.
      for (auto r = it; r != s.controls.end(); ++r) {
        if (std::abs((*r)->score - t->score) > best_d) break;
        consider(*r);
      }
      for (auto l = it; l != s.controls.begin();) {
        --l;
        if (std::abs((*l)->score - t->score) > best_d) break;
        consider(*l);
      }
      if (!best || best_d > caliper) {
        ++local.unmatched_caliper;
        continue;
      }
      pairs.push_back({t->id, best->id, t->score, best->score, t->response_time_hours});
      ++local.matched;
    }
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const MatchedPair& a, const MatchedPair& b) { return a.treated_id < b.treated_id; });
  if (stats) *stats = local;
  return pairs;
}

BalanceReport balance_report(const std::vector<MatchedPair>& pairs,
                             const std::vector<MatchingCovariates>& all_windows) {
  std::unordered_map<std::string, const MatchingCovariates*> by_id;
  by_id.reserve(all_windows.size());
  for (const auto& w : all_windows) by_id[w.window_id] = &w;
  auto lookup = [&](const std::string& id) -> const MatchingCovariates& {
    const auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw_error(ErrorCode::InvalidArgument, "pair references unknown window '" + id + "'");
    }
    return *it->second;
  };

  BalanceReport rep;
  rep.n_pairs = pairs.size();

  for (std::size_t j = 0; j < kPropensityFeatures; ++j) {
    BalanceRow row;
    row.feature = kPropensityFeatureNames[j];

    double sum_t = 0, sum_c = 0, n_t = 0, n_c = 0;
    for (const auto& w : all_windows) {
      const double v = propensity_features(w)[j];
      if (w.treated) {
        sum_t += v;
        n_t += 1;
      } else {
        sum_c += v;
        n_c += 1;
      }
    }
    if (n_t < 2 || n_c < 2) {
      throw_error(ErrorCode::Numeric, "balance needs at least two windows per group");
    }
    row.treated_mean = sum_t / n_t;
    row.control_mean = sum_c / n_c;
    double var_t = 0, var_c = 0;
    for (const auto& w : all_windows) {
      const double v = propensity_features(w)[j];
      if (w.treated) {
        var_t += (v - row.treated_mean) * (v - row.treated_mean);
      } else {
        var_c += (v - row.control_mean) * (v - row.control_mean);
      }
    }
    var_t /= n_t - 1;
    var_c /= n_c - 1;
    const double pooled = std::sqrt(0.5 * (var_t + var_c));

    double msum_t = 0, msum_c = 0;
    for (const MatchedPair& p : pairs) {
      msum_t += propensity_features(lookup(p.treated_id))[j];
      msum_c += propensity_features(lookup(p.control_id))[j];
    }
    if (!pairs.empty()) {
      row.matched_treated_mean = msum_t / static_cast<double>(pairs.size());
      row.matched_control_mean = msum_c / static_cast<double>(pairs.size());
    }

    if (pooled > 0.0) {
      row.smd_unmatched = (row.treated_mean - row.control_mean) / pooled;
      row.smd_matched = pairs.empty() ? 0.0
                                      : (row.matched_treated_mean - row.matched_control_mean) /
                                            pooled;
    } else {
      // No spread anywhere: equal means are perfectly balanced, unequal
      // means have no meaningful scale — flag instead of dividing by zero.
      const bool equal_u = row.treated_mean == row.control_mean;
      const bool equal_m = row.matched_treated_mean == row.matched_control_mean;
      row.smd_unmatched = 0.0;
      row.smd_matched = 0.0;
      row.degenerate = !(equal_u && equal_m);
    }

    if (!row.degenerate) {
      rep.worst_unmatched = std::max(rep.worst_unmatched, std::abs(row.smd_unmatched));
      rep.worst_matched = std::max(rep.worst_matched, std::abs(row.smd_matched));
    }
    rep.rows.push_back(std::move(row));
  }
  double n_t = 0, n_c = 0;
  for (const auto& w : all_windows) (w.treated ? n_t : n_c) += 1;
  rep.n_treated = static_cast<std::size_t>(n_t);
  rep.n_control = static_cast<std::size_t>(n_c);
  return rep;
}

void write_pairs_csv(const std::vector<MatchedPair>& pairs, std::ostream& out,
                     const std::string& comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "treated_window_id,control_window_id,treated_score,control_score,"
         "response_time_hours\n";
  for (const MatchedPair& p : pairs) {
    out << csv_escape(p.treated_id) << ',' << csv_escape(p.control_id) << ','
        << format_fixed(p.treated_score, 6) << ',' << format_fixed(p.control_score, 6) << ','
        << format_fixed(p.response_time_hours, 6) << '\n';
  }
  if (!out) throw_error(ErrorCode::Io, "failed writing pairs table");
}

std::vector<MatchedPair> read_pairs_csv(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> fields;
  if (!reader.next(fields)) {
    throw_error(ErrorCode::Parse, "pairs file is empty (missing header)");
  }
  const std::vector<std::string> expected = {"treated_window_id", "control_window_id",
                                             "treated_score", "control_score",
                                             "response_time_hours"};
  if (fields != expected) {
    throw_error(ErrorCode::Parse,
                "pairs header mismatch on line " + std::to_string(reader.line()));
  }
  std::vector<MatchedPair> out;
  auto num = [&](const std::string& s, const char* field) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw_error(ErrorCode::Parse, "pairs line " + std::to_string(reader.line()) +
                                        ", field '" + field + "': not a number");
    }
    return v;
  };
  while (reader.next(fields)) {
    if (fields.size() != 5) {
      throw_error(ErrorCode::Parse,
                  "pairs line " + std::to_string(reader.line()) + ": expected 5 fields");
    }
    MatchedPair p;
    p.treated_id = fields[0];
    p.control_id = fields[1];
    p.treated_score = num(fields[2], "treated_score");
    p.control_score = num(fields[3], "control_score");
    p.response_time_hours = num(fields[4], "response_time_hours");
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace recip
