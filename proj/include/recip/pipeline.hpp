// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Stage orchestration. Every stage reads its inputs from files and writes
// its outputs (plus a JSON run manifest) atomically into the output
// directory, so `all` is byte-identical to running the stages one by one.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "recip/config.hpp"

namespace recip {

struct StageResult {
  std::string stage;
  std::map<std::string, std::int64_t> counts;
  std::vector<std::string> outputs;  // artifact paths written
};

const std::vector<std::string>& stage_names();

// Derived sub-seed for one stage; stable across runs and platforms.
std::uint64_t stage_seed(const Config& cfg, const std::string& stage);

// Runs one stage (or "all"). Throws RecipError; on error no partial
// artifacts are left behind (writes go through temp files).
StageResult run_stage(const Config& cfg, const std::string& stage);

}  // namespace recip
