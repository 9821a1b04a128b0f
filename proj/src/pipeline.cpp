// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#include "recip/pipeline.hpp"

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "recip/covariates.hpp"
#include "recip/coxfit.hpp"
#include "recip/csv.hpp"
#include "recip/design.hpp"
#include "recip/error.hpp"
#include "recip/events.hpp"
#include "recip/matching.hpp"
#include "recip/parallel.hpp"
#include "recip/report.hpp"
#include "recip/rng.hpp"
#include "recip/simulate.hpp"
#include "recip/time_util.hpp"
#include "recip/windows.hpp"

namespace recip {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Atomic artifact writing: every output of a stage lands under a temporary
// name and is renamed in one commit pass, so a failing stage leaves nothing
// half-written behind.
class ArtifactBatch {
 public:
  explicit ArtifactBatch(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw_error(ErrorCode::Io, "cannot create output directory '" + dir_.string() + "'");
  }

  ~ArtifactBatch() {
    for (const auto& [tmp, final_] : pending_) {
      std::error_code ec;
      fs::remove(tmp, ec);
    }
  }

  // Runs `body` against a fresh stream for `name`, staged for commit.
  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    const fs::path final_path = dir_ / name;
    const fs::path tmp_path = dir_ / (name + ".tmp");
    {
      std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
      if (!out) throw_error(ErrorCode::Io, "cannot open '" + tmp_path.string() + "' for writing");
      body(out);
      out.flush();
      if (!out) throw_error(ErrorCode::Io, "failed writing '" + tmp_path.string() + "'");
    }
    pending_.emplace_back(tmp_path, final_path);
    names_.push_back(name);
  }

  const std::vector<std::string>& names() const noexcept { return names_; }

  void commit() {
    for (const auto& [tmp, final_] : pending_) {
      std::error_code ec;
      fs::rename(tmp, final_, ec);
      if (ec) {
        throw_error(ErrorCode::Io, "cannot move '" + tmp.string() + "' into place: " +
                                       ec.message());
      }
    }
    pending_.clear();
  }

 private:
  fs::path dir_;
  std::vector<std::pair<fs::path, fs::path>> pending_;
  std::vector<std::string> names_;
};

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

std::string stage_comment(const Config& cfg, const std::string& stage) {
  return "stage=" + stage + " config=" + hex16(cfg.hash());
}

std::ifstream open_input(const fs::path& path) {
  if (!fs::exists(path)) {
    throw_error(ErrorCode::MissingInput, "missing input file '" + path.string() + "'");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  return in;
}

struct StageIo {
  const Config& cfg;
  fs::path out_dir;
  std::vector<std::string> inputs;

  std::ifstream input(const std::string& name) {
    const fs::path p = out_dir / name;
    inputs.push_back(p.string());
    return open_input(p);
  }
};

std::optional<std::int64_t> bound_from(const Config& cfg, const char* key) {
  const std::string& s = cfg.get(key);
  if (s.empty()) return std::nullopt;
  const auto t = parse_iso8601_utc(s);
  if (!t) {
    throw_error(ErrorCode::InvalidArgument,
                std::string("configuration key '") + key + "' is not ISO-8601 UTC");
  }
  return t;
}

std::vector<RtBin> bins_from(const Config& cfg) {
  const std::vector<double> bounds = cfg.get_double_list("rt_bins_minutes");
  if (bounds.size() < 2) {
    throw_error(ErrorCode::InvalidArgument, "rt_bins_minutes needs at least two boundaries");
  }
  std::vector<RtBin> bins;
  for (std::size_t i = 1; i < bounds.size(); ++i) {
    if (!(bounds[i] > bounds[i - 1]) || bounds[i - 1] < 0) {
      throw_error(ErrorCode::InvalidArgument, "rt_bins_minutes must be ascending and >= 0");
    }
    bins.push_back({bounds[i - 1], bounds[i]});
  }
  return bins;
}

TenureBuckets buckets_from(const Config& cfg) {
  const std::vector<double> bounds = cfg.get_double_list("tenure_boundaries");
  return bounds.empty() ? TenureBuckets::defaults() : TenureBuckets::from_boundaries(bounds);
}

ordered_json fit_to_json(const FitResult& fit, const std::string& model) {
  ordered_json j;
  j["model"] = model;
  j["penalizer"] = fit.penalizer;
  j["n_rows"] = fit.n_rows;
  j["n_events"] = fit.n_events;
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  j["log_likelihood"] = fit.log_likelihood;
  j["objective"] = fit.objective;
  j["max_gradient"] = fit.max_gradient;
  j["clamped_rows"] = fit.clamped_rows;
  j["dropped"] = fit.dropped;
  ordered_json coefs = ordered_json::array();
  for (const CoefficientEstimate& c : fit.coefficients) {
    ordered_json jc;
    jc["name"] = c.name;
    jc["coef"] = c.coef;
    jc["se"] = c.se;
    jc["hr"] = c.hr;
    jc["ci_lower"] = c.ci_lower;
    jc["ci_upper"] = c.ci_upper;
    jc["p"] = c.p;
    coefs.push_back(std::move(jc));
  }
  j["coefficients"] = std::move(coefs);
  return j;
}

void stamp(ordered_json& j, const Config& cfg, const std::string& stage) {
  ordered_json stamped;
  stamped["stage"] = stage;
  stamped["config_hash"] = hex16(cfg.hash());
  for (auto& [k, v] : j.items()) stamped[k] = std::move(v);
  j = std::move(stamped);
}

void dump_json(std::ostream& out, const ordered_json& j) { out << j.dump(2) << '\n'; }

// ---------------------------------------------------------------------------
// Shared loading helpers.

Corpus load_corpus(StageIo& io) {
  auto in = io.input("corpus.csv");
  return parse_events(in, bound_from(io.cfg, "corpus_start"), bound_from(io.cfg, "corpus_end"));
}

std::vector<ObservationWindow> load_windows(StageIo& io) {
  auto in = io.input("windows.csv");
  return read_windows_csv(in);
}

std::vector<MatchedPair> load_pairs(StageIo& io) {
  auto in = io.input("pairs.csv");
  return read_pairs_csv(in);
}

std::vector<MatchingCovariates> load_covariates(StageIo& io) {
  auto in = io.input("covariates.csv");
  return read_covariates_csv(in);
}

DesignSpec design_spec_from(const Config& cfg, const std::string& stage) {
  DesignSpec spec;
  spec.clip_lo = cfg.get_double("clip_lo");
  spec.clip_hi = cfg.get_double("clip_hi");
  spec.bins = bins_from(cfg);
  spec.subsample_pairs = static_cast<std::size_t>(cfg.get_uint("subsample_pairs"));
  spec.seed = stage_seed(cfg, stage);
  return spec;
}

FitOptions fit_options_from(const Config& cfg, const char* penalizer_key) {
  FitOptions opt;
  opt.penalizer = cfg.get_double(penalizer_key);
  opt.tol = cfg.get_double("fit_tol");
  opt.max_iterations = static_cast<int>(cfg.get_int("fit_max_iterations"));
  if (opt.penalizer < 0) {
    throw_error(ErrorCode::InvalidArgument, "penalizer must be nonnegative");
  }
  return opt;
}

// ---------------------------------------------------------------------------
// Stages.

StageResult stage_simulate(const Config& cfg) {
  SimConfig sim;
  sim.seed = cfg.get_uint("seed");
  sim.n_users = static_cast<std::size_t>(cfg.get_uint("sim_n_users"));
  sim.n_answerers = static_cast<std::size_t>(cfg.get_uint("sim_n_answerers"));
  sim.horizon_days = cfg.get_double("sim_horizon_days");
  const auto start = parse_iso8601_utc(cfg.get("sim_start"));
  if (!start) throw_error(ErrorCode::InvalidArgument, "sim_start is not ISO-8601 UTC");
  sim.start_epoch = *start;
  sim.half_length_s = cfg.get_int("half_length_hours") * kSecondsPerHour;
  sim.question_rate_per_day = cfg.get_double("sim_question_rate_per_day");
  sim.first_question_delay_days = cfg.get_double("sim_first_question_delay_days");
  sim.tenure_balanced = cfg.get_bool("sim_tenure_balanced");
  sim.max_questions_per_user =
      static_cast<std::size_t>(cfg.get_uint("sim_max_questions_per_user"));
  sim.baseline_help_rate_per_hour = cfg.get_double("sim_baseline_help_rate_per_hour");
  sim.background_help_rate_per_day = cfg.get_double("sim_background_help_rate_per_day");
  sim.activity_sigma = cfg.get_double("sim_activity_sigma");
  sim.answer_intercept = cfg.get_double("sim_answer_intercept");
  sim.answer_activity_coef = cfg.get_double("sim_answer_activity_coef");
  sim.answer_tag_coef = cfg.get_double("sim_answer_tag_coef");
  sim.n_tags = static_cast<std::size_t>(cfg.get_uint("sim_n_tags"));
  sim.tag_spread = cfg.get_double("sim_tag_spread");
  sim.latency_median_hours = cfg.get_double("sim_latency_median_hours");
  sim.latency_sigma = cfg.get_double("sim_latency_sigma");
  sim.rt_mixture_prob = cfg.get_double("sim_rt_mixture_prob");
  sim.self_answer_prob = cfg.get_double("sim_self_answer_prob");
  sim.negative_score_prob = cfg.get_double("sim_negative_score_prob");
  sim.second_tag_prob = cfg.get_double("sim_second_tag_prob");
  sim.beta = {cfg.get_double("sim_beta0"), cfg.get_double("sim_beta1"),
              cfg.get_double("sim_beta2"), 0.0, cfg.get_double("sim_beta4")};
  sim.tenure_profile = cfg.get_double_list("sim_tenure_profile");
  sim.buckets = buckets_from(cfg);
  sim.rt_bin_multipliers = cfg.get_double_list("sim_rt_bin_multipliers");
  sim.bins = bins_from(cfg);
  if (!cfg.get("sim_rt_gamma").empty()) sim.rt_gamma = cfg.get_double("sim_rt_gamma");
  sim.rt_ref_mean = cfg.get_double("sim_rt_ref_mean");
  sim.rt_ref_sd = cfg.get_double("sim_rt_ref_sd");

  const SimOutput out = simulate(sim);

  StageResult result;
  result.stage = "simulate";
  result.counts["users"] = static_cast<std::int64_t>(sim.n_users);
  result.counts["answerers"] = static_cast<std::int64_t>(sim.n_answerers);
  result.counts["questions"] = static_cast<std::int64_t>(out.n_questions);
  result.counts["answers"] = static_cast<std::int64_t>(out.n_answers);
  result.counts["help_events"] = static_cast<std::int64_t>(out.n_help_events);
  result.counts["treated_questions"] = static_cast<std::int64_t>(out.n_treated_questions);
  result.counts["events"] = static_cast<std::int64_t>(out.corpus.events().size());

  ArtifactBatch batch(cfg.get("out"));
  batch.write("events.csv", [&](std::ostream& os) {
    serialize_events(out.corpus, os, stage_comment(cfg, "simulate"));
  });
  batch.write("truth.json", [&](std::ostream& os) {
    ordered_json j;
    j["beta"] = out.truth.beta;
    ordered_json buckets = ordered_json::object();
    for (std::size_t b = 0; b < out.truth.bucket_labels.size(); ++b) {
      buckets[out.truth.bucket_labels[b]] = out.truth.bucket_effects[b];
    }
    j["bucket_effects"] = std::move(buckets);
    ordered_json bins = ordered_json::object();
    for (std::size_t b = 0; b < out.truth.bin_labels.size(); ++b) {
      bins[out.truth.bin_labels[b]] = out.truth.bin_effects[b];
    }
    j["bin_effects"] = std::move(bins);
    if (out.truth.rt_gamma) {
      j["rt_gamma"] = *out.truth.rt_gamma;
    } else {
      j["rt_gamma"] = nullptr;
    }
    for (const auto& [k, v] : result.counts) j["counts"][k] = v;
    stamp(j, cfg, "simulate");
    dump_json(os, j);
  });
  result.outputs = batch.names();
  batch.commit();
  return result;
}

StageResult stage_ingest(const Config& cfg) {
  const std::string external = cfg.get("events");
  const fs::path events_path =
      external.empty() ? fs::path(cfg.get("out")) / "events.csv" : fs::path(external);
  auto in = open_input(events_path);
  const Corpus corpus =
      parse_events(in, bound_from(cfg, "corpus_start"), bound_from(cfg, "corpus_end"));

  std::size_t questions = 0, answers = 0;
  for (const Event& e : corpus.events()) {
    (e.kind == EventKind::Question ? questions : answers) += 1;
  }

  StageResult result;
  result.stage = "ingest";
  result.counts["events"] = static_cast<std::int64_t>(corpus.events().size());
  result.counts["questions"] = static_cast<std::int64_t>(questions);
  result.counts["answers"] = static_cast<std::int64_t>(answers);
  result.counts["orphans"] = static_cast<std::int64_t>(corpus.orphan_count());
  result.counts["users"] = static_cast<std::int64_t>(corpus.user_names().size());
  result.counts["corpus_start"] = corpus.start();
  result.counts["corpus_end"] = corpus.end();

  ArtifactBatch batch(cfg.get("out"));
  batch.write("corpus.csv", [&](std::ostream& os) {
    serialize_events(corpus, os, stage_comment(cfg, "ingest"));
  });
  result.outputs = batch.names();
  batch.commit();
  return result;
}

StageResult stage_windows(const Config& cfg) {
  StageIo io{cfg, cfg.get("out"), {}};
  const Corpus corpus = load_corpus(io);
  const std::int64_t half = cfg.get_int("half_length_hours") * kSecondsPerHour;

  FilterStats stats;
  const std::vector<std::uint32_t> eligible = eligible_questions(corpus, half, &stats);

  std::vector<ObservationWindow> windows(eligible.size());
  std::vector<MatchingCovariates> covariates(eligible.size());
  const CovariateIndex index(corpus, half);
  parallel_for(eligible.size(), 512, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      windows[i] = build_window(corpus, eligible[i], half);
      covariates[i] = index.compute(eligible[i], windows[i]);
    }
  });

  std::int64_t treated = 0, dropped_help = 0;
  for (const ObservationWindow& w : windows) {
    treated += w.treated ? 1 : 0;
    dropped_help += w.dropped_help;
  }

  StageResult result;
  result.stage = "windows";
  result.counts["questions"] = static_cast<std::int64_t>(stats.questions);
  result.counts["eligible"] = static_cast<std::int64_t>(stats.eligible);
  result.counts["pre_truncated"] = static_cast<std::int64_t>(stats.pre_truncated);
  result.counts["post_truncated"] = static_cast<std::int64_t>(stats.post_truncated);
  result.counts["self_answered"] = static_cast<std::int64_t>(stats.self_answered);
  result.counts["treated"] = treated;
  result.counts["control"] = static_cast<std::int64_t>(windows.size()) - treated;
  result.counts["dropped_help"] = dropped_help;

  ArtifactBatch batch(cfg.get("out"));
  batch.write("windows.csv", [&](std::ostream& os) {
    write_windows_csv(windows, os, stage_comment(cfg, "windows"));
  });
  batch.write("covariates.csv", [&](std::ostream& os) {
    write_covariates_csv(covariates, os, stage_comment(cfg, "windows"));
  });
  result.outputs = batch.names();
  batch.commit();
  return result;
}

StageResult stage_match(const Config& cfg) {
  StageIo io{cfg, cfg.get("out"), {}};
  const std::vector<MatchingCovariates> covariates = load_covariates(io);
  const std::vector<ObservationWindow> windows = load_windows(io);
  const WindowMap window_map = index_windows(windows);

  const PropensityModel model = fit_propensity(covariates);

  std::vector<ScoredWindow> scored;
  scored.reserve(covariates.size());
  for (const MatchingCovariates& c : covariates) {
    ScoredWindow s;
    s.id = c.window_id;
    s.treated = c.treated;
    s.score = propensity_score(model, propensity_features(c));
    s.calendar_year = c.calendar_year;
    s.top_tag = c.top_tag;
    if (c.treated) {
      const auto it = window_map.find(c.window_id);
      if (it == window_map.end() || !it->second.t_answer) {
        throw_error(ErrorCode::InvalidArgument,
                    "covariates/windows disagree about treated window '" + c.window_id + "'");
      }
      s.response_time_hours =
          static_cast<double>(*it->second.t_answer - it->second.t_question) /
          static_cast<double>(kSecondsPerHour);
    }
    scored.push_back(std::move(s));
  }

  MatchStats stats;
  const std::vector<MatchedPair> pairs =
      match_windows(scored, cfg.get_double("caliper"), stage_seed(cfg, "match"), &stats);
  const BalanceReport balance = balance_report(pairs, covariates);

  StageResult result;
  result.stage = "match";
  result.counts["windows"] = static_cast<std::int64_t>(covariates.size());
  result.counts["treated"] = static_cast<std::int64_t>(stats.treated);
  result.counts["matched"] = static_cast<std::int64_t>(stats.matched);
  result.counts["unmatched_caliper"] = static_cast<std::int64_t>(stats.unmatched_caliper);
  result.counts["unmatched_empty"] = static_cast<std::int64_t>(stats.unmatched_empty);
  result.counts["propensity_iterations"] = model.iterations;

  ArtifactBatch batch(cfg.get("out"));
  batch.write("pairs.csv", [&](std::ostream& os) {
    write_pairs_csv(pairs, os, stage_comment(cfg, "match"));
  });
  batch.write("propensity.json", [&](std::ostream& os) {
    ordered_json j;
    j["features"] = model.feature_names;
    j["log1p"] = model.log1p_applied;
    j["means"] = model.means;
    j["sds"] = model.sds;
    j["coefficients"] = model.coefficients;
    j["dropped"] = model.dropped;
    j["iterations"] = model.iterations;
    j["log_likelihood"] = model.log_likelihood;
    stamp(j, cfg, "match");
    dump_json(os, j);
  });
  batch.write("balance.json", [&](std::ostream& os) {
    ordered_json j;
    j["n_pairs"] = balance.n_pairs;
    j["n_treated"] = balance.n_treated;
    j["n_control"] = balance.n_control;
    j["worst_unmatched_smd"] = balance.worst_unmatched;
    j["worst_matched_smd"] = balance.worst_matched;
    ordered_json rows = ordered_json::array();
    for (const BalanceRow& r : balance.rows) {
      ordered_json jr;
      jr["feature"] = r.feature;
      jr["treated_mean"] = r.treated_mean;
      jr["control_mean"] = r.control_mean;
      jr["smd_unmatched"] = r.smd_unmatched;
      jr["matched_treated_mean"] = r.matched_treated_mean;
      jr["matched_control_mean"] = r.matched_control_mean;
      jr["smd_matched"] = r.smd_matched;
      jr["degenerate"] = r.degenerate;
      rows.push_back(std::move(jr));
    }
    j["rows"] = std::move(rows);
    stamp(j, cfg, "match");
    dump_json(os, j);
  });
  batch.write("balance.txt", [&](std::ostream& os) {
    os << "# " << stage_comment(cfg, "match") << '\n';
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-16s %12s %12s %10s | %12s %12s %10s\n", "feature",
                  "mean_T", "mean_C", "SMD", "mean_T(m)", "mean_C(m)", "SMD(m)");
    os << buf;
    for (const BalanceRow& r : balance.rows) {
      std::snprintf(buf, sizeof buf, "%-16s %12.4f %12.4f %10.4f | %12.4f %12.4f %10.4f%s\n",
                    r.feature.c_str(), r.treated_mean, r.control_mean, r.smd_unmatched,
                    r.matched_treated_mean, r.matched_control_mean, r.smd_matched,
                    r.degenerate ? "  (degenerate)" : "");
      os << buf;
    }
    std::snprintf(buf, sizeof buf,
                  "pairs=%zu treated=%zu control=%zu worst_SMD unmatched=%.4f matched=%.4f\n",
                  balance.n_pairs, balance.n_treated, balance.n_control,
                  balance.worst_unmatched, balance.worst_matched);
    os << buf;
  });
  result.outputs = batch.names();
  batch.commit();
  return result;
}

// Drops the response-time interaction columns from an assembled design,
// leaving the main-model columns (the rows are identical either way).
CoxRows strip_rt_columns(const CoxRows& rt) {
  CoxRows main_rows;
  main_rows.names.assign(rt.names.begin(), rt.names.begin() + 5);
  main_rows.window_ids = rt.window_ids;
  main_rows.start = rt.start;
  main_rows.stop = rt.stop;
  main_rows.event = rt.event;
  const std::size_t n = rt.n();
  main_rows.x.resize(n * 5);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 5; ++j) main_rows.x[i * 5 + j] = rt.x[i * 7 + j];
  }
  return main_rows;
}

void write_intervals_csv(const CoxRows& rows, std::ostream& os, const std::string& comment) {
  os << "# " << comment << '\n';
  os << "window_id,start,stop,event";
  for (const std::string& name : rows.names) os << ',' << name;
  os << '\n';
  const std::size_t p = rows.p();
  for (std::size_t i = 0; i < rows.n(); ++i) {
    os << csv_escape(rows.window_ids[i]) << ',' << format_fixed(rows.start[i], 6) << ','
       << format_fixed(rows.stop[i], 6) << ',' << (rows.event[i] ? '1' : '0');
    for (std::size_t j = 0; j < p; ++j) {
      const double v = rows.x[i * p + j];
      if (v == 0.0) {
        os << ",0";
      } else if (v == 1.0) {
        os << ",1";
      } else {
        os << ',' << format_fixed(v, 6);
      }
    }
    os << '\n';
  }
}

StageResult stage_fit(const Config& cfg) {
  StageIo io{cfg, cfg.get("out"), {}};
  const std::vector<ObservationWindow> windows = load_windows(io);
  const WindowMap window_map = index_windows(windows);
  const std::vector<MatchedPair> pairs = load_pairs(io);
  if (pairs.empty()) throw_error(ErrorCode::Numeric, "no matched pairs to fit");

  const bool with_rt = cfg.get_bool("fit_rt");
  DesignSpec spec = design_spec_from(cfg, "fit");
  spec.model = with_rt ? DesignModel::ResponseTime : DesignModel::Main;

  const AssembledDesign design = assemble_design(pairs, window_map, spec);

  StageResult result;
  result.stage = "fit";
  result.counts["pairs_used"] = static_cast<std::int64_t>(design.n_pairs_used);

  ArtifactBatch batch(cfg.get("out"));
  batch.write("intervals.csv", [&](std::ostream& os) {
    write_intervals_csv(design.rows, os, stage_comment(cfg, "fit"));
  });

  const CoxRows main_rows = with_rt ? strip_rt_columns(design.rows) : design.rows;
  const CoxDataset main_data = prepare(main_rows);
  const FitResult main_fit = fit(main_data, fit_options_from(cfg, "penalizer_main"));
  result.counts["n_rows"] = static_cast<std::int64_t>(main_fit.n_rows);
  result.counts["n_events"] = static_cast<std::int64_t>(main_fit.n_events);
  result.counts["iterations"] = main_fit.iterations;
  result.counts["converged"] = main_fit.converged ? 1 : 0;
  result.counts["clamped_rows"] = static_cast<std::int64_t>(main_fit.clamped_rows);

  batch.write("fit_main.json", [&](std::ostream& os) {
    ordered_json j = fit_to_json(main_fit, "main");
    j["pairs_used"] = design.n_pairs_used;
    stamp(j, cfg, "fit");
    dump_json(os, j);
  });

  if (with_rt) {
    const CoxDataset rt_data = prepare(design.rows);
    const FitResult rt_fit = fit(rt_data, fit_options_from(cfg, "penalizer_rt"));
    result.counts["rt_iterations"] = rt_fit.iterations;
    result.counts["rt_converged"] = rt_fit.converged ? 1 : 0;
    batch.write("fit_rt.json", [&](std::ostream& os) {
      ordered_json j = fit_to_json(rt_fit, "rt_interactions");
      j["pairs_used"] = design.n_pairs_used;
      stamp(j, cfg, "fit");
      dump_json(os, j);
    });
  }

  result.outputs = batch.names();
  batch.commit();
  return result;
}

StageResult stage_sweep(const Config& cfg) {
  StageIo io{cfg, cfg.get("out"), {}};
  const std::vector<ObservationWindow> windows = load_windows(io);
  const WindowMap window_map = index_windows(windows);
  const std::vector<MatchedPair> pairs = load_pairs(io);
  const std::vector<MatchingCovariates> covariates = load_covariates(io);

  const TenureBuckets buckets = buckets_from(cfg);
  DesignSpec spec = design_spec_from(cfg, "sweep");
  const std::vector<SweepEntry> entries = run_tenure_sweep(
      pairs, window_map, covariates, buckets, spec, fit_options_from(cfg, "penalizer_main"));

  StageResult result;
  result.stage = "sweep";
  result.counts["strata"] = static_cast<std::int64_t>(entries.size());
  std::int64_t ok = 0, total_pairs = 0;
  for (const SweepEntry& e : entries) {
    ok += e.ok ? 1 : 0;
    total_pairs += static_cast<std::int64_t>(e.n_pairs);
  }
  result.counts["strata_ok"] = ok;
  result.counts["pairs"] = total_pairs;

  ArtifactBatch batch(cfg.get("out"));
  batch.write("sweep.json", [&](std::ostream& os) {
    ordered_json j;
    ordered_json strata = ordered_json::array();
    for (const SweepEntry& e : entries) {
      ordered_json je;
      je["stratum"] = e.bucket;
      je["n_pairs"] = e.n_pairs;
      je["ok"] = e.ok;
      if (e.ok) {
        je["n_rows"] = e.fit.n_rows;
        je["n_events"] = e.fit.n_events;
        const CoefficientEstimate* c = e.fit.find("is_treated_active");
        if (c) {
          je["coef"] = c->coef;
          je["se"] = c->se;
          je["hr"] = c->hr;
          je["ci_lower"] = c->ci_lower;
          je["ci_upper"] = c->ci_upper;
          je["p"] = c->p;
        } else {
          je["coef"] = nullptr;  // column constant in this stratum
        }
      } else {
        je["error"] = e.error;
      }
      strata.push_back(std::move(je));
    }
    j["strata"] = std::move(strata);
    stamp(j, cfg, "sweep");
    dump_json(os, j);
  });
  batch.write("sweep.txt", [&](std::ostream& os) {
    os << "# " << stage_comment(cfg, "sweep") << '\n';
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-8s %8s %9s %9s %9s %9s\n", "stratum", "pairs",
                  "coef", "se", "hr", "p");
    os << buf;
    for (const SweepEntry& e : entries) {
      if (e.ok) {
        const CoefficientEstimate* c = e.fit.find("is_treated_active");
        if (c) {
          std::snprintf(buf, sizeof buf, "%-8s %8zu %9.4f %9.4f %9.4f %9.2e\n",
                        e.bucket.c_str(), e.n_pairs, c->coef, c->se, c->hr, c->p);
        } else {
          std::snprintf(buf, sizeof buf, "%-8s %8zu %9s\n", e.bucket.c_str(), e.n_pairs,
                        "dropped");
        }
      } else {
        std::snprintf(buf, sizeof buf, "%-8s %8zu  error: %s\n", e.bucket.c_str(), e.n_pairs,
                      e.error.c_str());
      }
      os << buf;
    }
  });
  result.outputs = batch.names();
  batch.commit();
  return result;
}

StageResult stage_bins(const Config& cfg) {
  StageIo io{cfg, cfg.get("out"), {}};
  const std::vector<ObservationWindow> windows = load_windows(io);
  const WindowMap window_map = index_windows(windows);
  const std::vector<MatchedPair> pairs = load_pairs(io);

  DesignSpec spec = design_spec_from(cfg, "bins");
  const BinsResult bins = run_bins(pairs, window_map, spec, fit_options_from(cfg, "penalizer_bins"));

  StageResult result;
  result.stage = "bins";
  result.counts["pairs_used"] = static_cast<std::int64_t>(bins.n_pairs_used);
  result.counts["pairs_dropped"] = static_cast<std::int64_t>(bins.n_pairs_dropped);
  result.counts["n_rows"] = static_cast<std::int64_t>(bins.fit.n_rows);
  result.counts["n_events"] = static_cast<std::int64_t>(bins.fit.n_events);
  result.counts["converged"] = bins.fit.converged ? 1 : 0;

  ArtifactBatch batch(cfg.get("out"));
  batch.write("bins.json", [&](std::ostream& os) {
    ordered_json j;
    j["n_pairs_used"] = bins.n_pairs_used;
    j["n_pairs_dropped"] = bins.n_pairs_dropped;
    j["iterations"] = bins.fit.iterations;
    j["converged"] = bins.fit.converged;
    ordered_json entries = ordered_json::array();
    for (const BinEntry& e : bins.entries) {
      ordered_json je;
      je["bin"] = e.bin.label();
      je["n_pairs"] = e.n_pairs;
      if (e.estimated) {
        je["coef"] = e.estimate.coef;
        je["se"] = e.estimate.se;
        je["hr"] = e.estimate.hr;
        je["ci_lower"] = e.estimate.ci_lower;
        je["ci_upper"] = e.estimate.ci_upper;
        je["p"] = e.estimate.p;
      } else {
        je["coef"] = nullptr;
      }
      entries.push_back(std::move(je));
    }
    j["bins"] = std::move(entries);
    stamp(j, cfg, "bins");
    dump_json(os, j);
  });
  batch.write("bins.txt", [&](std::ostream& os) {
    os << "# " << stage_comment(cfg, "bins") << '\n';
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-12s %8s %9s %9s %9s %9s\n", "bin", "pairs", "coef",
                  "se", "hr", "p");
    os << buf;
    for (const BinEntry& e : bins.entries) {
      if (e.estimated) {
        std::snprintf(buf, sizeof buf, "%-12s %8zu %9.4f %9.4f %9.4f %9.2e\n",
                      e.bin.label().c_str(), e.n_pairs, e.estimate.coef, e.estimate.se,
                      e.estimate.hr, e.estimate.p);
      } else {
        std::snprintf(buf, sizeof buf, "%-12s %8zu %9s\n", e.bin.label().c_str(), e.n_pairs,
                      "empty");
      }
      os << buf;
    }
  });
  result.outputs = batch.names();
  batch.commit();
  return result;
}

StageResult stage_report(const Config& cfg) {
  StageIo io{cfg, cfg.get("out"), {}};
  const std::vector<ObservationWindow> windows = load_windows(io);
  const WindowMap window_map = index_windows(windows);
  const std::vector<MatchedPair> pairs = load_pairs(io);

  const std::vector<CurvePoint> curves =
      help_rate_curves(pairs, window_map, cfg.get_double("report_bin_hours"));

  StageResult result;
  result.stage = "report";
  result.counts["pairs"] = static_cast<std::int64_t>(pairs.size());
  result.counts["points"] = static_cast<std::int64_t>(curves.size());

  ArtifactBatch batch(cfg.get("out"));
  batch.write("curves.csv", [&](std::ostream& os) {
    write_curves_csv(curves, os, stage_comment(cfg, "report"));
  });
  result.outputs = batch.names();
  batch.commit();
  return result;
}

using StageFn = StageResult (*)(const Config&);

const std::vector<std::pair<std::string, StageFn>>& stage_table() {
  static const std::vector<std::pair<std::string, StageFn>> kStages = {
      {"simulate", stage_simulate}, {"ingest", stage_ingest}, {"windows", stage_windows},
      {"match", stage_match},       {"fit", stage_fit},       {"sweep", stage_sweep},
      {"bins", stage_bins},         {"report", stage_report},
  };
  return kStages;
}

void write_manifest(const Config& cfg, const StageResult& result, std::int64_t ms) {
  ordered_json j;
  j["version"] = kVersion;
  j["seed"] = cfg.get_uint("seed");
  j["stage_seed"] = stage_seed(cfg, result.stage);
  j["threads"] = max_threads();
  ordered_json overrides = ordered_json::object();
  for (const std::string& k : cfg.overridden()) overrides[k] = cfg.get(k);
  j["overrides"] = std::move(overrides);
  ordered_json counts = ordered_json::object();
  for (const auto& [k, v] : result.counts) counts[k] = v;
  j["counts"] = std::move(counts);
  j["outputs"] = result.outputs;
  j["duration_ms"] = ms;
  stamp(j, cfg, result.stage);

  ArtifactBatch batch(cfg.get("out"));
  batch.write("manifest_" + result.stage + ".json",
              [&](std::ostream& os) { dump_json(os, j); });
  batch.commit();
}

StageResult run_single(const Config& cfg, const std::string& stage) {
  for (const auto& [name, fn] : stage_table()) {
    if (name == stage) {
      const auto t0 = std::chrono::steady_clock::now();
      StageResult result = fn(cfg);
      const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
      write_manifest(cfg, result, ms);
      return result;
    }
  }
  throw_error(ErrorCode::InvalidArgument, "unknown stage '" + stage + "'");
}

}  // namespace

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> kNames = [] {
    std::vector<std::string> names;
    for (const auto& [name, fn] : stage_table()) names.push_back(name);
    names.push_back("all");
    return names;
  }();
  return kNames;
}

std::uint64_t stage_seed(const Config& cfg, const std::string& stage) {
  return mix_seed(cfg.get_uint("seed"), fnv1a64("stage:" + stage));
}

StageResult run_stage(const Config& cfg, const std::string& stage) {
  set_max_threads(static_cast<int>(cfg.get_int("threads")));

  if (stage != "all") return run_single(cfg, stage);

  const auto t0 = std::chrono::steady_clock::now();
  StageResult total;
  total.stage = "all";
  // An externally supplied event log replaces the simulation step.
  std::vector<std::string> chain;
  if (cfg.get("events").empty()) chain.push_back("simulate");
  for (const char* s : {"ingest", "windows", "match", "fit", "sweep", "bins", "report"}) {
    chain.push_back(s);
  }
  for (const std::string& s : chain) {
    const StageResult r = run_single(cfg, s);
    for (const auto& [k, v] : r.counts) total.counts[s + "." + k] = v;
    for (const std::string& o : r.outputs) total.outputs.push_back(o);
  }
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
  write_manifest(cfg, total, ms);
  return total;
}

}  // namespace recip
