// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#include "recip.h"

#include <json.hpp>

#include <cstring>
#include <new>
#include <string>

#include "recip/config.hpp"
#include "recip/error.hpp"
#include "recip/pipeline.hpp"

using recip::Config;
using recip::ErrorCode;
using recip::RecipError;

// The C layer owns the Config plus scratch storage for the last value handed
// out by recip_config_get (the header pins its lifetime to the config).
struct recip_config {
  Config cfg;
  std::string last_get;
};

namespace {

thread_local std::string t_last_error;

recip_status status_from(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return RECIP_E_INVALID_ARGUMENT;
    case ErrorCode::MissingInput: return RECIP_E_MISSING_INPUT;
    case ErrorCode::Parse: return RECIP_E_PARSE;
    case ErrorCode::Io: return RECIP_E_IO;
    case ErrorCode::Numeric: return RECIP_E_NUMERIC;
    case ErrorCode::Internal: return RECIP_E_INTERNAL;
  }
  return RECIP_E_INTERNAL;
}

// Runs `fn`, translating exceptions into status codes + last_error.
template <typename Fn>
recip_status guarded(Fn&& fn) {
  try {
    fn();
    t_last_error.clear();
    return RECIP_OK;
  } catch (const RecipError& e) {
    t_last_error = e.what();
    return status_from(e.code());
  } catch (const std::bad_alloc&) {
    t_last_error = "out of memory";
    return RECIP_E_INTERNAL;
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return RECIP_E_INTERNAL;
  } catch (...) {
    t_last_error = "unknown error";
    return RECIP_E_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* recip_version(void) { return "0.1.0"; }

const char* recip_status_name(recip_status status) {
  switch (status) {
    case RECIP_OK: return "ok";
    case RECIP_E_INVALID_ARGUMENT: return "invalid_argument";
    case RECIP_E_MISSING_INPUT: return "missing_input";
    case RECIP_E_PARSE: return "parse";
    case RECIP_E_IO: return "io";
    case RECIP_E_NUMERIC: return "numeric";
    case RECIP_E_INTERNAL: return "internal";
  }
  return "internal";
}

const char* recip_last_error(void) { return t_last_error.c_str(); }

recip_config* recip_config_new(void) {
  try {
    return new recip_config();
  } catch (...) {
    return nullptr;
  }
}

void recip_config_free(recip_config* cfg) { delete cfg; }

recip_status recip_config_load_file(recip_config* cfg, const char* path) {
  if (!cfg || !path) {
    t_last_error = "null argument";
    return RECIP_E_INVALID_ARGUMENT;
  }
  return guarded([&] { cfg->cfg.load_file(path); });
}

recip_status recip_config_set(recip_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) {
    t_last_error = "null argument";
    return RECIP_E_INVALID_ARGUMENT;
  }
  return guarded([&] { cfg->cfg.set(key, value); });
}

const char* recip_config_get(const recip_config* cfg, const char* key) {
  if (!cfg || !key || !cfg->cfg.has(key)) return nullptr;
  auto* mut = const_cast<recip_config*>(cfg);
  mut->last_get = cfg->cfg.get(key);
  return mut->last_get.c_str();
}

recip_status recip_run_stage(recip_config* cfg, const char* stage, char** summary_json) {
  if (!cfg || !stage) {
    t_last_error = "null argument";
    return RECIP_E_INVALID_ARGUMENT;
  }
  return guarded([&] {
    const recip::StageResult result = recip::run_stage(cfg->cfg, stage);
    if (summary_json) {
      nlohmann::ordered_json j;
      j["stage"] = result.stage;
      nlohmann::ordered_json counts = nlohmann::ordered_json::object();
      for (const auto& [k, v] : result.counts) counts[k] = v;
      j["counts"] = std::move(counts);
      j["outputs"] = result.outputs;
      *summary_json = dup_string(j.dump(2));
      if (!*summary_json) throw std::bad_alloc();
    }
  });
}

const char* recip_stage_names(void) {
  static const std::string joined = [] {
    std::string s;
    for (const std::string& name : recip::stage_names()) {
      if (!s.empty()) s += '\n';
      s += name;
    }
    return s;
  }();
  return joined.c_str();
}

void recip_string_free(char* s) { std::free(s); }

}  // extern "C"
