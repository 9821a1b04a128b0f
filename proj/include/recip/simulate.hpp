// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Synthetic Q&A corpus generator with known ground truth. Each user's
// helping activity is an inhomogeneous Poisson process whose intensity is
// piecewise-constant over the phases of their question windows, so the
// hazard model downstream is correctly specified and planted coefficients
// are recoverable.
//
// Structural choices:
//  * Help events answer external posts (ids that never appear as
//    questions), so helping never grants treatment to an analyzed question.
//  * Treatment answers come from a dedicated answerer pool; pool members ask
//    nothing and are never analyzed.
//  * A control window's phase switch comes from its matched partner, which
//    is unknowable at generation time, so the post-answer main effect is
//    structurally zero in the generator (beta[3] must be 0).
//  * Per-user activity a_u scales question, helping, and (optionally)
//    answer-receipt rates alike: the classic engagement confound.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "recip/covariates.hpp"
#include "recip/design.hpp"
#include "recip/events.hpp"

namespace recip {

struct SimConfig {
  std::uint64_t seed = 42;
  std::size_t n_users = 5000;
  std::size_t n_answerers = 500;
  double horizon_days = 180.0;
  std::int64_t start_epoch = 1577836800;  // 2020-01-01T00:00:00Z
  std::int64_t half_length_s = 48 * 3600;

  // Question arrivals: the user's account is created at a uniform arrival
  // time; the first question follows after one window length plus an
  // exponential delay (mean first_question_delay_days), then a Poisson
  // stream at question_rate_per_day * a_u. Same-user questions closer than
  // one full window length apart are dropped so windows never overlap, and
  // no window reaches back before its asker's account exists.
  // tenure_balanced instead draws every question so account age at window
  // start is spread evenly over the tenure buckets.
  double question_rate_per_day = 0.02;
  double first_question_delay_days = 30.0;
  bool tenure_balanced = false;
  std::size_t max_questions_per_user = 500;

  // Helping intensity (events/hour): baseline inside windows, background
  // outside; both scale with a_u.
  double baseline_help_rate_per_hour = 0.015;
  double background_help_rate_per_day = 0.05;
  double activity_sigma = 0.6;  // a_u ~ exp(N(-sigma^2/2, sigma^2)), mean 1

  // Answer assignment. P(answered) = sigmoid(intercept +
  // activity_coef * ln(a_u) + tag_coef * tag_offset).
  double answer_intercept = 0.0;
  double answer_activity_coef = 0.0;
  double answer_tag_coef = 1.0;
  std::size_t n_tags = 8;
  double tag_spread = 0.8;  // tag offsets uniform on [-spread, spread]

  // Answer latency: lognormal with the given median (hours), or — with
  // probability rt_mixture_prob — uniform inside a uniformly chosen bin.
  double latency_median_hours = 0.34;
  double latency_sigma = 2.33;
  double rt_mixture_prob = 0.0;

  double self_answer_prob = 0.01;
  double negative_score_prob = 0.02;
  double second_tag_prob = 0.15;

  // Planted log-rate effects, in window-phase order:
  // [treatment, post_question, treatment*post_question, post_answer (must
  // be 0), treated-active]. The treated-active coefficient may be modulated
  // per tenure bucket and per response-time bin, or shifted by a continuous
  // slope on the standardized log response time.
  std::array<double, 5> beta = {0, 0, 0, 0, 0};
  std::vector<double> tenure_profile;      // empty, or one multiplier per bucket
  TenureBuckets buckets = TenureBuckets::defaults();
  std::vector<double> rt_bin_multipliers;  // empty, or one multiplier per bin
  std::vector<RtBin> bins = default_rt_bins();
  std::optional<double> rt_gamma;
  double rt_ref_mean = 3.93;  // standardization constants for the gamma term
  double rt_ref_sd = 0.35;
};

struct PlantedTruth {
  std::array<double, 5> beta = {0, 0, 0, 0, 0};
  std::vector<std::string> bucket_labels;
  std::vector<double> bucket_effects;  // beta[4] * tenure multiplier
  std::vector<std::string> bin_labels;
  std::vector<double> bin_effects;     // beta[4] * bin multiplier
  std::optional<double> rt_gamma;
};

struct SimOutput {
  Corpus corpus;
  PlantedTruth truth;
  std::size_t n_questions = 0;
  std::size_t n_answers = 0;       // includes self-answers
  std::size_t n_help_events = 0;
  std::size_t n_treated_questions = 0;
};

SimOutput simulate(const SimConfig& config);

}  // namespace recip
