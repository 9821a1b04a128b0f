// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#include "recip/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "recip/error.hpp"
#include "recip/parallel.hpp"
#include "recip/rng.hpp"
#include "recip/time_util.hpp"

namespace recip {

namespace {

std::string padded(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%07zu", prefix, i);
  return std::string(buf);
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double z = std::exp(x);
  return z / (1.0 + z);
}

void validate(const SimConfig& c) {
  if (c.n_users == 0) throw_error(ErrorCode::InvalidArgument, "simulation needs users");
  if (c.n_answerers == 0) throw_error(ErrorCode::InvalidArgument, "simulation needs answerers");
  if (c.n_tags == 0) throw_error(ErrorCode::InvalidArgument, "simulation needs tags");
  if (!(c.horizon_days > 0) || c.half_length_s <= 0) {
    throw_error(ErrorCode::InvalidArgument, "bad simulation horizon or half-length");
  }
  const double four_windows = 4.0 * static_cast<double>(c.half_length_s) / 86400.0;
  if (c.horizon_days <= four_windows) {
    throw_error(ErrorCode::InvalidArgument,
                "horizon too short to hold a single observation window");
  }
  if (c.beta[3] != 0.0) {
    throw_error(ErrorCode::InvalidArgument,
                "the post-answer main effect is structurally zero in this generator; "
                "plant effects on the treated-active coefficient instead");
  }
  if (!c.tenure_profile.empty() && c.tenure_profile.size() != c.buckets.size()) {
    throw_error(ErrorCode::InvalidArgument, "tenure profile size must match bucket count");
  }
  if (!c.rt_bin_multipliers.empty() && c.rt_bin_multipliers.size() != c.bins.size()) {
    throw_error(ErrorCode::InvalidArgument, "bin multiplier size must match bin count");
  }
  if (!(c.baseline_help_rate_per_hour > 0) || c.background_help_rate_per_day < 0) {
    throw_error(ErrorCode::InvalidArgument, "help rates must be positive");
  }
  if (!(c.latency_median_hours > 0) || !(c.latency_sigma > 0)) {
    throw_error(ErrorCode::InvalidArgument, "bad latency parameters");
  }
}

// One user's question with everything downstream of it resolved.
struct PlannedQuestion {
  std::int64_t t_q = 0;
  std::uint32_t tag = 0;
  std::optional<std::uint32_t> tag2;
  std::int32_t q_score = 0;
  bool answered = false;
  bool self = false;
  std::int64_t latency_s = 0;
  std::int32_t score = 0;      // the answer's score
  std::size_t answerer = 0;    // pool index when not self
  bool treated = false;        // qualifying answer inside the window
  double beta4_eff = 0.0;      // planted treated-active log-rate effect
};

// Events minted by one user, with post/parent as local indexes into `posts`.
struct UserEvents {
  std::vector<Event> events;
  std::vector<std::string> posts;
  std::size_t questions = 0, answers = 0, helps = 0, treated = 0;
};

}  // namespace

SimOutput simulate(const SimConfig& cfg) {
  validate(cfg);

  const std::int64_t H = cfg.half_length_s;
  const std::int64_t horizon_s =
      cfg.start_epoch + static_cast<std::int64_t>(cfg.horizon_days * 86400.0);

  std::vector<std::string> user_names;
  user_names.reserve(cfg.n_users + cfg.n_answerers);
  for (std::size_t u = 0; u < cfg.n_users; ++u) user_names.push_back(padded("u", u));
  for (std::size_t h = 0; h < cfg.n_answerers; ++h) user_names.push_back(padded("h", h));
  std::vector<std::string> tag_names;
  for (std::size_t t = 0; t < cfg.n_tags; ++t) tag_names.push_back("t" + std::to_string(t));

  // Tag difficulty offsets shift answer probability per topic.
  std::vector<double> tag_offset(cfg.n_tags);
  {
    Rng rng(mix_seed(cfg.seed, fnv1a64("tag-offsets")));
    for (double& o : tag_offset) o = rng.uniform(-cfg.tag_spread, cfg.tag_spread);
  }

  PlantedTruth truth;
  truth.beta = cfg.beta;
  truth.bucket_labels = cfg.buckets.labels;
  for (std::size_t b = 0; b < cfg.buckets.size(); ++b) {
    const double mult = cfg.tenure_profile.empty() ? 1.0 : cfg.tenure_profile[b];
    truth.bucket_effects.push_back(cfg.beta[4] * mult);
  }
  for (std::size_t b = 0; b < cfg.bins.size(); ++b) {
    truth.bin_labels.push_back(cfg.bins[b].label());
    const double mult = cfg.rt_bin_multipliers.empty() ? 1.0 : cfg.rt_bin_multipliers[b];
    truth.bin_effects.push_back(cfg.beta[4] * mult);
  }
  truth.rt_gamma = cfg.rt_gamma;

  // Per-user generation, deposited by user index so the merge order (and
  // therefore every artifact) is identical for any thread count.
  std::vector<UserEvents> per_user(cfg.n_users);

  parallel_for(cfg.n_users, 256, [&](std::size_t u_begin, std::size_t u_end) {
    for (std::size_t u = u_begin; u < u_end; ++u) {
      UserEvents& out = per_user[u];
      Rng rng(mix_seed(cfg.seed, 0x100000000ULL + u));

      const std::int64_t span = horizon_s - cfg.start_epoch;
      const std::int64_t arrival =
          cfg.start_epoch +
          static_cast<std::int64_t>(
              rng.uniform01() * static_cast<double>(std::max<std::int64_t>(1, span - 4 * H)));
      const double a_u = std::exp(cfg.activity_sigma * rng.normal() -
                                  0.5 * cfg.activity_sigma * cfg.activity_sigma);

      // --- question times ---------------------------------------------------
      std::vector<std::int64_t> q_times;
      const double remaining_days = static_cast<double>(horizon_s - arrival) / 86400.0;
      if (cfg.tenure_balanced) {
        // Cap the aims before placement: the chronological spacing filter
        // below keeps the earliest survivors, and an uncapped aim count
        // would concentrate the kept questions in the smallest buckets.
        const std::uint64_t aims =
            std::min<std::uint64_t>(cfg.max_questions_per_user,
                                    1 + rng.poisson(cfg.question_rate_per_day * a_u *
                                                    remaining_days));
        const double h_days = static_cast<double>(H) / 86400.0;
        for (std::uint64_t k = 0; k < aims; ++k) {
          // Aim the window-start account age at a uniformly chosen bucket.
          const std::size_t b = static_cast<std::size_t>(rng.below(cfg.buckets.size()));
          const double lo = b == 0 ? 0.0 : cfg.buckets.upper_days[b - 1];
          const double cap = remaining_days - 2.5 * h_days;
          double hi = b < cfg.buckets.upper_days.size() ? cfg.buckets.upper_days[b]
                                                        : cfg.buckets.upper_days.back() * 1.5;
          hi = std::min(hi, cap);
          if (!(hi > lo)) continue;  // bucket unreachable within this user's span
          const double tenure_days = rng.uniform(lo, hi);
          q_times.push_back(arrival + H + static_cast<std::int64_t>(tenure_days * 86400.0));
        }
      } else {
        // Account creation precedes the first question by at least one full
        // window length, so no window reaches back before the account
        // exists and every pre-question half has ordinary activity in it.
        double t = static_cast<double>(arrival + H);
        if (cfg.first_question_delay_days > 0) {
          t += rng.exponential(1.0 / (cfg.first_question_delay_days * 86400.0));
        }
        if (t < static_cast<double>(horizon_s)) {
          q_times.push_back(static_cast<std::int64_t>(t));
        }
        const double rate_per_s = cfg.question_rate_per_day * a_u / 86400.0;
        if (rate_per_s > 0 && !q_times.empty()) {
          while (q_times.size() < cfg.max_questions_per_user) {
            t += rng.exponential(rate_per_s);
            if (t >= static_cast<double>(horizon_s)) break;
            q_times.push_back(static_cast<std::int64_t>(t));
          }
        }
      }
      std::sort(q_times.begin(), q_times.end());
      std::vector<std::int64_t> accepted;
      for (std::int64_t t : q_times) {
        if (t >= horizon_s) continue;
        // One full window of spacing keeps a user's windows disjoint.
        if (!accepted.empty() && t < accepted.back() + 2 * H + 1) continue;
        accepted.push_back(t);
        if (accepted.size() >= cfg.max_questions_per_user) break;
      }

      // --- resolve each question --------------------------------------------
      std::vector<PlannedQuestion> plan;
      plan.reserve(accepted.size());
      for (std::int64_t t_q : accepted) {
        PlannedQuestion q;
        q.t_q = t_q;
        q.tag = static_cast<std::uint32_t>(rng.below(cfg.n_tags));
        if (rng.bernoulli(cfg.second_tag_prob)) {
          q.tag2 = static_cast<std::uint32_t>(rng.below(cfg.n_tags));
        }
        q.q_score = static_cast<std::int32_t>(rng.below(3));
        const double p_ans =
            sigmoid(cfg.answer_intercept + cfg.answer_activity_coef * std::log(a_u) +
                    cfg.answer_tag_coef * tag_offset[q.tag]);
        q.answered = rng.bernoulli(p_ans);
        if (q.answered) {
          if (cfg.rt_mixture_prob > 0 && rng.bernoulli(cfg.rt_mixture_prob)) {
            const std::size_t b = static_cast<std::size_t>(rng.below(cfg.bins.size()));
            const double minutes =
                rng.uniform(cfg.bins[b].lower_minutes, cfg.bins[b].upper_minutes);
            q.latency_s = std::max<std::int64_t>(1, static_cast<std::int64_t>(minutes * 60.0));
          } else {
            const double hours =
                rng.lognormal(std::log(cfg.latency_median_hours), cfg.latency_sigma);
            q.latency_s = std::max<std::int64_t>(1, static_cast<std::int64_t>(hours * 3600.0));
          }
          q.self = rng.bernoulli(cfg.self_answer_prob);
          q.score = rng.bernoulli(cfg.negative_score_prob)
                        ? -1
                        : static_cast<std::int32_t>(rng.below(3));
          q.answerer = static_cast<std::size_t>(rng.below(cfg.n_answerers));
          q.treated = !q.self && q.score >= 0 && q.latency_s <= H;
        }
        if (q.treated) {
          const double tenure_days =
              std::max(0.0, static_cast<double>(q.t_q - H - arrival) / 86400.0);
          const std::size_t bucket = cfg.buckets.bucket_of(tenure_days);
          double eff = cfg.beta[4];
          if (!cfg.tenure_profile.empty()) eff *= cfg.tenure_profile[bucket];
          if (!cfg.rt_bin_multipliers.empty()) {
            const int bin = bin_of(cfg.bins, static_cast<double>(q.latency_s) / 60.0);
            eff *= bin < 0 ? 1.0 : cfg.rt_bin_multipliers[static_cast<std::size_t>(bin)];
          }
          if (cfg.rt_gamma) {
            const double log_rt =
                std::log1p(static_cast<double>(H + q.latency_s) / 3600.0);
            eff += *cfg.rt_gamma * (log_rt - cfg.rt_ref_mean) / cfg.rt_ref_sd;
          }
          q.beta4_eff = eff;
        }
        plan.push_back(q);
      }

      // --- emit question and answer events ----------------------------------
      auto local_post = [&](std::string name) {
        out.posts.push_back(std::move(name));
        return static_cast<std::uint32_t>(out.posts.size() - 1);
      };
      std::vector<std::uint32_t> question_post(plan.size());
      for (std::size_t k = 0; k < plan.size(); ++k) {
        const PlannedQuestion& q = plan[k];
        char buf[48];
        std::snprintf(buf, sizeof buf, "q%07zu_%04zu", u, k);
        Event ev;
        ev.user = static_cast<std::uint32_t>(u);
        ev.kind = EventKind::Question;
        ev.post = question_post[k] = local_post(buf);
        ev.timestamp = q.t_q;
        ev.score = q.q_score;
        ev.tags.push_back(q.tag);
        if (q.tag2) ev.tags.push_back(*q.tag2);
        out.events.push_back(std::move(ev));
        ++out.questions;
        if (q.treated) ++out.treated;
      }
      for (std::size_t k = 0; k < plan.size(); ++k) {
        const PlannedQuestion& q = plan[k];
        if (!q.answered) continue;
        const std::int64_t t_ans = q.t_q + q.latency_s;
        if (t_ans > horizon_s) continue;  // falls off the observation edge
        char buf[48];
        std::snprintf(buf, sizeof buf, "r%07zu_%04zu", u, k);
        Event ev;
        ev.user = q.self ? static_cast<std::uint32_t>(u)
                         : static_cast<std::uint32_t>(cfg.n_users + q.answerer);
        ev.kind = EventKind::Answer;
        ev.post = local_post(buf);
        ev.parent = question_post[k];
        ev.timestamp = t_ans;
        ev.score = q.score;
        out.events.push_back(std::move(ev));
        ++out.answers;
      }

      // --- helping stream: piecewise-constant Poisson process ----------------
      // Within a window the rate follows the planted phase multipliers;
      // outside it sits at the background level. Everything scales with a_u.
      struct Segment {
        std::int64_t begin, end;
        double rate_per_hour;
      };
      std::vector<Segment> segments;
      const double bg = cfg.background_help_rate_per_day / 24.0 * a_u;
      const double base = cfg.baseline_help_rate_per_hour * a_u;
      std::int64_t cursor = arrival;
      for (const PlannedQuestion& q : plan) {
        const std::int64_t w_start = std::max(q.t_q - H, arrival);
        const std::int64_t w_end = q.t_q + H;
        if (w_start > cursor) segments.push_back({cursor, w_start, bg});
        const double T = q.treated ? 1.0 : 0.0;
        const double pre = base * std::exp(cfg.beta[0] * T);
        const double waiting =
            base * std::exp(cfg.beta[0] * T + cfg.beta[1] + cfg.beta[2] * T);
        segments.push_back({w_start, q.t_q, pre});
        if (q.treated) {
          const std::int64_t t_ans = q.t_q + q.latency_s;
          const double active =
              base * std::exp(cfg.beta[0] + cfg.beta[1] + cfg.beta[2] + q.beta4_eff);
          segments.push_back({q.t_q, t_ans, waiting});
          segments.push_back({t_ans, w_end, active});
        } else {
          segments.push_back({q.t_q, w_end, waiting});
        }
        cursor = w_end;
      }
      if (cursor < horizon_s) segments.push_back({cursor, horizon_s, bg});

      std::vector<std::int64_t> help_times;
      // Registration-day activity: the account's first observable action
      // happens at creation, so downstream tenure proxies (time since first
      // event) track account age exactly.
      help_times.push_back(arrival);
      for (const Segment& s : segments) {
        if (s.end <= s.begin || s.rate_per_hour <= 0) continue;
        const double len_h = static_cast<double>(s.end - s.begin) / 3600.0;
        const std::uint64_t count = rng.poisson(s.rate_per_hour * len_h);
        for (std::uint64_t i = 0; i < count; ++i) {
          const double offset = rng.uniform01() * static_cast<double>(s.end - s.begin);
          help_times.push_back(s.begin + static_cast<std::int64_t>(offset));
        }
      }
      std::sort(help_times.begin(), help_times.end());
      std::size_t help_counter = 0;
      for (std::int64_t t : help_times) {
        if (t >= horizon_s) continue;
        char abuf[48], xbuf[48];
        std::snprintf(abuf, sizeof abuf, "a%07zu_%05zu", u, help_counter);
        std::snprintf(xbuf, sizeof xbuf, "x%07zu_%05zu", u, help_counter);
        ++help_counter;
        Event ev;
        ev.user = static_cast<std::uint32_t>(u);
        ev.kind = EventKind::Answer;
        ev.post = local_post(abuf);
        ev.parent = local_post(xbuf);  // external post: never a question
        ev.timestamp = t;
        ev.score = 0;
        out.events.push_back(std::move(ev));
        ++out.helps;
      }
    }
  });

  // --- merge: rebase local post indexes onto the global table ---------------
  std::vector<Event> events;
  std::vector<std::string> posts;
  std::size_t total_events = 0, total_posts = 0;
  for (const UserEvents& ue : per_user) {
    total_events += ue.events.size();
    total_posts += ue.posts.size();
  }
  events.reserve(total_events);
  posts.reserve(total_posts);

  SimOutput out;
  for (UserEvents& ue : per_user) {
    const std::uint32_t base = static_cast<std::uint32_t>(posts.size());
    for (std::string& name : ue.posts) posts.push_back(std::move(name));
    for (Event& ev : ue.events) {
      ev.post += base;
      if (ev.parent != kNoPost) ev.parent += base;
      events.push_back(std::move(ev));
    }
    out.n_questions += ue.questions;
    out.n_answers += ue.answers;
    out.n_help_events += ue.helps;
    out.n_treated_questions += ue.treated;
  }

  out.corpus =
      Corpus::from_events(std::move(events), std::move(user_names), std::move(posts),
                          std::move(tag_names), cfg.start_epoch, horizon_s);
  out.truth = std::move(truth);
  return out;
}

}  // namespace recip
