#pragma once

#include <string>
#include <vector>

#include "moec/trainer.hpp"

namespace moec::cli {

// Flat, typed key-value configuration with dotted section paths. Every key
// is schema-checked; unknown keys are configuration errors.
struct RunConfig {
  trainer::RunSettings settings;
  std::vector<std::uint64_t> seeds{1};
  std::string out_dir = "out";
  int eval_episodes = 200;
  std::string highd_data_dir;
  double highd_min_span_s = 10.0;
  int explore_schedule_steps = 0;  // 0: follow trainer.steps
};

RunConfig default_config();

// Applies one key=value assignment; throws ConfigError naming the key.
void apply_assignment(RunConfig& cfg, const std::string& key,
                      const std::string& value);

// Loads a config file (key = value lines, # comments); path may be empty.
RunConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides);

// Ties derived fields together and validates every module config.
void finalize_config(RunConfig& cfg);

// Every schema key with its resolved value, sorted; written next to run
// artifacts so a run is reproducible from the snapshot alone.
std::string resolved_snapshot(const RunConfig& cfg);

std::vector<std::string> schema_keys();

}  // namespace moec::cli
