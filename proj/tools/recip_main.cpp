// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Deliberately speaks only the public C API so it
// doubles as a smoke test for the shared library surface.
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "recip.h"

namespace {

struct ConfigDeleter {
  void operator()(recip_config* cfg) const { recip_config_free(cfg); }
};
using ConfigPtr = std::unique_ptr<recip_config, ConfigDeleter>;

int fail(recip_status status) {
  std::fprintf(stderr, "error (%s): %s\n", recip_status_name(status), recip_last_error());
  return status == RECIP_E_MISSING_INPUT ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"recip: matched-pair survival analysis of question/answer activity"};
  app.set_version_flag("--version", std::string("recip ") + recip_version());
  app.require_subcommand(1);

  std::string config_path, out_dir, events_path;
  std::vector<std::string> sets;
  std::string seed, threads;
  app.add_option("-c,--config", config_path, "configuration file (key = value lines)");
  app.add_option("-o,--out", out_dir, "output directory for artifacts");
  app.add_option("-e,--events", events_path, "input event log (skips the simulator)");
  app.add_option("--seed", seed, "master random seed");
  app.add_option("--threads", threads, "worker thread count (0 = all cores)");
  app.add_option("-s,--set", sets, "override KEY=VALUE (repeatable)")
      ->type_name("KEY=VALUE");
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "suppress the run summary");

  // One subcommand per stage, plus `all`.
  std::string stage_list = recip_stage_names();
  std::vector<std::string> stages;
  for (std::size_t pos = 0; pos < stage_list.size();) {
    const std::size_t nl = stage_list.find('\n', pos);
    const std::size_t end = nl == std::string::npos ? stage_list.size() : nl;
    stages.push_back(stage_list.substr(pos, end - pos));
    pos = end + 1;
  }
  for (const std::string& s : stages) {
    // Fallthrough lets global options appear after the stage name.
    app.add_subcommand(s, "run the '" + s + "' stage")->fallthrough();
  }

  CLI11_PARSE(app, argc, argv);

  ConfigPtr cfg(recip_config_new());
  if (!cfg) {
    std::fprintf(stderr, "error: cannot allocate configuration\n");
    return 1;
  }

  recip_status status = RECIP_OK;
  if (!config_path.empty()) {
    status = recip_config_load_file(cfg.get(), config_path.c_str());
    if (status != RECIP_OK) return fail(status);
  }
  const auto set_key = [&](const char* key, const std::string& value) {
    if (value.empty()) return true;
    status = recip_config_set(cfg.get(), key, value.c_str());
    return status == RECIP_OK;
  };
  if (!set_key("out", out_dir)) return fail(status);
  if (!set_key("events", events_path)) return fail(status);
  if (!set_key("seed", seed)) return fail(status);
  if (!set_key("threads", threads)) return fail(status);
  for (const std::string& kv : sets) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::fprintf(stderr, "error: --set expects KEY=VALUE, got '%s'\n", kv.c_str());
      return 1;
    }
    status = recip_config_set(cfg.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
    if (status != RECIP_OK) return fail(status);
  }

  const std::string stage = app.get_subcommands().front()->get_name();
  char* summary = nullptr;
  status = recip_run_stage(cfg.get(), stage.c_str(), quiet ? nullptr : &summary);
  if (status != RECIP_OK) return fail(status);
  if (summary) {
    std::fputs(summary, stdout);
    std::fputc('\n', stdout);
    recip_string_free(summary);
  }
  return 0;
}
