#include "moec/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace moec::cli {

namespace {

enum class Type { kInt, kDouble, kBool, kString, kIntList, kU64List };

struct Entry {
  const char* key;
  Type type;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const int r = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trail");
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": expected integer, got '" + v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trail");
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": expected number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError("config key " + key + ": expected boolean, got '" + v + "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(parse_int(key, tok));
  return out;
}

std::vector<std::uint64_t> parse_u64_list(const std::string& key,
                                          const std::string& v) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    try {
      out.push_back(std::stoull(tok));
    } catch (const std::exception&) {
      throw ConfigError("config key " + key + ": expected seed list, got '" + v + "'");
    }
  }
  if (out.empty()) throw ConfigError("config key " + key + ": empty seed list");
  return out;
}

std::string int_list_to_string(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string u64_list_to_string(const std::vector<std::uint64_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

#define INT_ENTRY(KEY, FIELD)                                                  \
  Entry{KEY, Type::kInt,                                                       \
        [](RunConfig& c, const std::string& v) { c.FIELD = parse_int(KEY, v); }, \
        [](const RunConfig& c) { return std::to_string(c.FIELD); }}
#define DBL_ENTRY(KEY, FIELD)                                                  \
  Entry{KEY, Type::kDouble,                                                    \
        [](RunConfig& c, const std::string& v) { c.FIELD = parse_double(KEY, v); }, \
        [](const RunConfig& c) { return fmt_double(c.FIELD); }}
#define BOOL_ENTRY(KEY, FIELD)                                                 \
  Entry{KEY, Type::kBool,                                                      \
        [](RunConfig& c, const std::string& v) { c.FIELD = parse_bool(KEY, v); }, \
        [](const RunConfig& c) { return c.FIELD ? "true" : "false"; }}

const std::vector<Entry>& schema() {
  static const std::vector<Entry> entries = {
      // environment
      INT_ENTRY("env.lane_count", settings.env.road.lane_count),
      DBL_ENTRY("env.lane_width", settings.env.road.lane_width),
      DBL_ENTRY("env.length", settings.env.road.length),
      DBL_ENTRY("env.dt", settings.env.dt),
      DBL_ENTRY("env.density", settings.env.density),
      DBL_ENTRY("env.episode_cap_s", settings.env.episode_cap_s),
      DBL_ENTRY("env.obs_back", settings.env.obs_back),
      DBL_ENTRY("env.obs_fwd", settings.env.obs_fwd),
      DBL_ENTRY("env.accel_limit", settings.env.accel_limit),
      DBL_ENTRY("env.idm.v0_min", settings.env.idm.v0_min),
      DBL_ENTRY("env.idm.v0_max", settings.env.idm.v0_max),
      DBL_ENTRY("env.idm.headway", settings.env.idm.headway),
      DBL_ENTRY("env.idm.min_gap", settings.env.idm.min_gap),
      DBL_ENTRY("env.idm.accel", settings.env.idm.accel),
      DBL_ENTRY("env.idm.brake", settings.env.idm.brake),
      INT_ENTRY("env.idm.exponent", settings.env.idm.exponent),
      DBL_ENTRY("env.idm.hard_brake", settings.env.idm.hard_brake),
      DBL_ENTRY("env.mobil.politeness", settings.env.mobil.politeness),
      DBL_ENTRY("env.mobil.threshold", settings.env.mobil.threshold),
      DBL_ENTRY("env.mobil.b_safe", settings.env.mobil.b_safe),
      DBL_ENTRY("env.mobil.cooldown_s", settings.env.mobil.cooldown_s),
      DBL_ENTRY("env.mobil.duration_s", settings.env.mobil.duration_s),
      DBL_ENTRY("env.vehicle.length", settings.env.vehicle.length),
      DBL_ENTRY("env.vehicle.width", settings.env.vehicle.width),
      DBL_ENTRY("env.vehicle.wheelbase", settings.env.vehicle.wheelbase),
      DBL_ENTRY("env.vehicle.steer_max", settings.env.vehicle.steer_max),
      // reward
      DBL_ENTRY("reward.v_target", settings.reward.v_target),
      DBL_ENTRY("reward.v_low", settings.reward.v_low),
      DBL_ENTRY("reward.ttc_max", settings.reward.ttc_max),
      BOOL_ENTRY("reward.eff_negated", settings.reward.eff_negated),
      // agent
      Entry{"agent.omega_safe", Type::kDouble,
            [](RunConfig& c, const std::string& v) {
              c.settings.reward.omega[0] = parse_double("agent.omega_safe", v);
            },
            [](const RunConfig& c) { return fmt_double(c.settings.reward.omega[0]); }},
      Entry{"agent.omega_gen", Type::kDouble,
            [](RunConfig& c, const std::string& v) {
              c.settings.reward.omega[1] = parse_double("agent.omega_gen", v);
            },
            [](const RunConfig& c) { return fmt_double(c.settings.reward.omega[1]); }},
      INT_ENTRY("agent.m", settings.agent.m_critics),
      DBL_ENTRY("agent.gamma", settings.agent.gamma),
      DBL_ENTRY("agent.alpha", settings.agent.alpha),
      DBL_ENTRY("agent.beta", settings.agent.beta),
      DBL_ENTRY("agent.tau", settings.agent.tau),
      DBL_ENTRY("agent.lambda1", settings.agent.lambda[0]),
      DBL_ENTRY("agent.lambda2", settings.agent.lambda[1]),
      DBL_ENTRY("agent.lambda3", settings.agent.lambda[2]),
      DBL_ENTRY("agent.lambda4", settings.agent.lambda[3]),
      Entry{"agent.hidden", Type::kIntList,
            [](RunConfig& c, const std::string& v) {
              c.settings.agent.hidden = parse_int_list("agent.hidden", v);
            },
            [](const RunConfig& c) { return int_list_to_string(c.settings.agent.hidden); }},
      // action machinery
      DBL_ENTRY("action.r0", settings.agent.bounds.turn_radius_min),
      DBL_ENTRY("action.brake_max", settings.agent.bounds.brake_max),
      DBL_ENTRY("action.l_cap", settings.agent.bounds.l_cap),
      INT_ENTRY("action.horizon_points", settings.path.horizon_points),
      DBL_ENTRY("action.min_length", settings.path.min_length),
      DBL_ENTRY("action.stanley_gain", settings.stanley.gain),
      DBL_ENTRY("action.stanley_vsoft", settings.stanley.speed_soft),
      DBL_ENTRY("action.pid_kp", settings.pid.k_p),
      DBL_ENTRY("action.pid_kd", settings.pid.k_d),
      DBL_ENTRY("action.pid_kheading", settings.pid.k_heading),
      // exploration
      INT_ENTRY("explore.k", settings.explore.candidate_count),
      DBL_ENTRY("explore.weight_start", settings.explore.weight_start),
      DBL_ENTRY("explore.weight_floor", settings.explore.weight_floor),
      DBL_ENTRY("explore.threshold", settings.explore.threshold),
      INT_ENTRY("explore.schedule_steps", explore_schedule_steps),
      // trainer
      INT_ENTRY("trainer.steps", settings.train.total_steps),
      INT_ENTRY("trainer.batch", settings.train.batch_size),
      INT_ENTRY("trainer.buffer", settings.train.buffer_capacity),
      INT_ENTRY("trainer.warmup", settings.train.warmup),
      INT_ENTRY("trainer.update_every", settings.train.update_every),
      INT_ENTRY("trainer.checkpoint_every", settings.train.checkpoint_every),
      INT_ENTRY("trainer.nonfinite_limit", settings.train.nonfinite_limit),
      BOOL_ENTRY("trainer.uncertainty_trace", settings.train.write_uncertainty_trace),
      BOOL_ENTRY("trainer.reward_trace", settings.train.write_reward_trace),
      Entry{"trainer.mode", Type::kString,
            [](RunConfig& c, const std::string& v) {
              c.settings.train.mode = trainer::ablation_mode_from_string(v);
            },
            [](const RunConfig& c) {
              return trainer::ablation_mode_name(c.settings.train.mode);
            }},
      // run
      Entry{"run.seeds", Type::kU64List,
            [](RunConfig& c, const std::string& v) {
              c.seeds = parse_u64_list("run.seeds", v);
            },
            [](const RunConfig& c) { return u64_list_to_string(c.seeds); }},
      Entry{"run.out", Type::kString,
            [](RunConfig& c, const std::string& v) { c.out_dir = v; },
            [](const RunConfig& c) { return c.out_dir; }},
      INT_ENTRY("eval.episodes", eval_episodes),
      Entry{"highd.data", Type::kString,
            [](RunConfig& c, const std::string& v) { c.highd_data_dir = v; },
            [](const RunConfig& c) { return c.highd_data_dir; }},
      DBL_ENTRY("highd.min_span_s", highd_min_span_s),
  };
  return entries;
}

#undef INT_ENTRY
#undef DBL_ENTRY
#undef BOOL_ENTRY

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  std::size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

}  // namespace

RunConfig default_config() { return RunConfig{}; }

void apply_assignment(RunConfig& cfg, const std::string& key,
                      const std::string& value) {
  for (const auto& e : schema()) {
    if (key == e.key) {
      e.set(cfg, value);
      return;
    }
  }
  throw ConfigError("unknown config key: " + key);
}

RunConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides) {
  RunConfig cfg = default_config();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(path + ":" + std::to_string(line_no) +
                          ": expected key = value");
      apply_assignment(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
  }
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override must be key=value: " + ov);
    apply_assignment(cfg, trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)));
  }
  finalize_config(cfg);
  return cfg;
}

void finalize_config(RunConfig& cfg) {
  auto& s = cfg.settings;
  // tied fields
  s.agent.lane_width = s.env.road.lane_width;
  s.agent.bounds.acc_limit = s.env.accel_limit;
  if (s.agent.n_objectives == 2) s.agent.omega = {s.reward.omega[0], s.reward.omega[1]};
  s.reward.acc_max = s.env.accel_limit;
  s.reward.steer_max = s.env.vehicle.steer_max;
  s.stanley.steer_max = s.env.vehicle.steer_max;
  s.stanley.wheelbase = s.env.vehicle.wheelbase;
  s.pid.steer_max = s.env.vehicle.steer_max;
  s.explore.schedule_steps = cfg.explore_schedule_steps > 0
                                 ? cfg.explore_schedule_steps
                                 : s.train.total_steps;
  if (s.explore.schedule_steps <= 0) s.explore.schedule_steps = 1;
  if (cfg.eval_episodes < 0) throw ConfigError("eval.episodes must be >= 0");
  s.validate();
}

std::string resolved_snapshot(const RunConfig& cfg) {
  std::vector<std::string> lines;
  for (const auto& e : schema()) lines.push_back(std::string(e.key) + " = " + e.get(cfg));
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out += '\n';
  }
  return out;
}

std::vector<std::string> schema_keys() {
  std::vector<std::string> keys;
  for (const auto& e : schema()) keys.push_back(e.key);
  return keys;
}

}  // namespace moec::cli
