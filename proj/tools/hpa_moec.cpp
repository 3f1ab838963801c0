// Command-line front end: train / eval / replay / ablate / fixture.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "moec/highd.hpp"
#include "moec/run_config.hpp"

namespace fs = std::filesystem;
using namespace moec;

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::vector<std::uint64_t> seeds;
  std::string out;
};

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config_path, "Configuration file");
  sub->add_option("--override", args.overrides,
                  "Override config entries, key=value (repeatable)");
  sub->add_option("--seed", args.seeds, "Run seed (repeatable)");
  sub->add_option("--out", args.out, "Output directory");
}

cli::RunConfig resolve(const CommonArgs& args) {
  cli::RunConfig cfg = cli::load_config(args.config_path, args.overrides);
  if (!args.seeds.empty()) cfg.seeds = args.seeds;
  if (!args.out.empty()) cfg.out_dir = args.out;
  if (const char* env_out = std::getenv("HPA_MOEC_OUT"))
    if (*env_out) cfg.out_dir = env_out;
  return cfg;
}

void write_snapshot(const cli::RunConfig& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream f(dir / "resolved_config.txt");
  f << cli::resolved_snapshot(cfg);
}

int cmd_train(const CommonArgs& args) {
  cli::RunConfig cfg = resolve(args);
  write_snapshot(cfg, cfg.out_dir);
  for (const auto seed : cfg.seeds) {
    trainer::RunSettings s = cfg.settings;
    s.seed = seed;
    s.out_dir = (fs::path(cfg.out_dir) / ("seed_" + std::to_string(seed))).string();
    trainer::Trainer tr(s);
    const auto result = tr.train();
    std::cout << "seed " << seed << ": " << result.episodes << " episodes, "
              << result.collision_episodes << " collisions, "
              << result.offroad_episodes << " off-road, checkpoint at "
              << result.checkpoint_dir.string() << "\n";
  }
  return 0;
}

trainer::MetricsAggregate evaluate_highd(const agent::MoecAgent& ag,
                                         const cli::RunConfig& cfg,
                                         int episodes, std::uint64_t seed,
                                         const std::string& out_dir,
                                         bool traces) {
  if (cfg.highd_data_dir.empty())
    throw ConfigError("highd evaluation requires highd.data (--data)");
  const fs::path data(cfg.highd_data_dir);
  std::ifstream mf(data / "recordingMeta.txt");
  if (!mf) throw DataError("cannot open " + (data / "recordingMeta.txt").string());
  const auto meta = highd::parse_meta(mf);
  std::ifstream tf(data / "tracks.csv");
  if (!tf) throw DataError("cannot open " + (data / "tracks.csv").string());
  const auto rec = highd::parse_tracks(tf, meta, cfg.settings.env.dt);

  trainer::Actuation actuation{rec.road, cfg.settings.path, cfg.settings.stanley,
                               cfg.settings.pid,
                               cfg.settings.train.mode == trainer::AblationMode::kDaMo,
                               cfg.settings.reward.v_target,
                               cfg.settings.env.accel_limit};
  const auto controller = highd::agent_controller(ag, actuation, rec.road.lane_count);
  highd::ReplayConfig rcfg;
  rcfg.reward = cfg.settings.reward;
  rcfg.episode_cap_s = cfg.settings.env.episode_cap_s;
  rcfg.wheelbase = cfg.settings.env.vehicle.wheelbase;
  rcfg.steer_max = cfg.settings.env.vehicle.steer_max;
  rcfg.accel_limit = cfg.settings.env.accel_limit;
  rcfg.obs_back = cfg.settings.env.obs_back;
  rcfg.obs_fwd = cfg.settings.env.obs_fwd;

  std::vector<trainer::EpisodeMetrics> eps;
  fs::path out(out_dir);
  if (!out_dir.empty()) fs::create_directories(out);
  Rng rng(seed);
  for (int ep = 0; ep < episodes; ++ep) {
    const int ego = highd::pick_ego(rec, cfg.highd_min_span_s, rng);
    const auto res = highd::replay_episode(rec, ego, controller, rcfg);
    eps.push_back(res.metrics);
    if (traces && !out_dir.empty()) {
      char name[64];
      std::snprintf(name, sizeof(name), "ep%04d", ep);
      std::ofstream t(out / (std::string(name) + "_trajectory.csv"));
      t << res.trajectory_csv;
      std::ofstream r(out / (std::string(name) + "_rewards.csv"));
      r << res.reward_csv;
    }
  }
  const auto agg = trainer::aggregate_metrics(eps);
  if (!out_dir.empty()) {
    std::ofstream m(out / "metrics.csv");
    m << trainer::metrics_csv_header();
    for (std::size_t i = 0; i < eps.size(); ++i)
      m << trainer::metrics_csv_row(static_cast<int>(i), eps[i]);
    std::ofstream s(out / "summary.txt");
    s << trainer::metrics_summary_table("agent", agg);
  }
  return agg;
}

int cmd_eval(const CommonArgs& args, const std::string& checkpoint,
             int episodes_flag, const std::string& source,
             const std::string& data_flag, bool traces) {
  cli::RunConfig cfg = resolve(args);
  if (!data_flag.empty()) cfg.highd_data_dir = data_flag;
  const int episodes = episodes_flag >= 0 ? episodes_flag : cfg.eval_episodes;
  const auto ag = agent::MoecAgent::load(checkpoint);
  const std::uint64_t seed = cfg.seeds.front();
  write_snapshot(cfg, cfg.out_dir);

  trainer::MetricsAggregate agg;
  if (source == "sim") {
    agg = trainer::evaluate_simulator(ag, cfg.settings, episodes, seed,
                                      cfg.out_dir, traces, nullptr);
  } else if (source == "highd") {
    agg = evaluate_highd(ag, cfg, episodes, seed, cfg.out_dir, traces);
  } else {
    throw ConfigError("eval source must be sim or highd");
  }
  std::cout << trainer::metrics_summary_table("agent", agg);
  return 0;
}

int cmd_ablate(const CommonArgs& args, const std::string& modes_csv) {
  cli::RunConfig cfg = resolve(args);
  write_snapshot(cfg, cfg.out_dir);
  std::vector<trainer::AblationMode> modes;
  {
    std::stringstream ss(modes_csv);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) modes.push_back(trainer::ablation_mode_from_string(tok));
  }
  if (modes.empty()) throw ConfigError("ablate: no modes given");

  std::ofstream summary(fs::path(cfg.out_dir) / "ablation_summary.csv");
  summary << "mode,episodes,ar,as,nl,vs,va,cr_percent\n";
  for (const auto mode : modes) {
    const auto name = trainer::ablation_mode_name(mode);
    std::vector<trainer::EpisodeMetrics> pooled;
    for (const auto seed : cfg.seeds) {
      trainer::RunSettings s = trainer::ablation_settings(cfg.settings, mode);
      s.seed = seed;
      s.out_dir = (fs::path(cfg.out_dir) / name / ("seed_" + std::to_string(seed))).string();
      trainer::Trainer tr(s);
      tr.train();
      std::vector<trainer::EpisodeMetrics> eps;
      trainer::evaluate_simulator(tr.trained_agent(), s, cfg.eval_episodes,
                                  seed + 1000, "", false, &eps);
      pooled.insert(pooled.end(), eps.begin(), eps.end());
      std::cout << name << " seed " << seed << " trained and evaluated\n";
    }
    const auto agg = trainer::aggregate_metrics(pooled);
    summary << name << "," << agg.episodes << "," << fmt_double(agg.ar_mean)
            << "," << fmt_double(agg.as_mean) << "," << fmt_double(agg.nl_mean)
            << "," << fmt_double(agg.vs_mean) << "," << fmt_double(agg.va_mean)
            << "," << fmt_double(agg.cr_percent) << "\n";
    std::cout << trainer::metrics_summary_table(name, agg);
  }
  return 0;
}

int cmd_fixture(const std::string& kind, int vehicles, double duration,
                double frame_rate, int lanes, std::uint64_t seed, bool opposite,
                const std::string& out) {
  highd::FixtureSpec spec;
  spec.kind = highd::fixture_kind_from_string(kind);
  spec.vehicles = vehicles;
  spec.duration_s = duration;
  spec.frame_rate = frame_rate;
  spec.lanes = lanes;
  spec.seed = seed;
  spec.opposite_direction = opposite;
  std::string out_dir = out;
  if (const char* env_out = std::getenv("HPA_MOEC_OUT"))
    if (*env_out) out_dir = env_out;
  highd::write_fixture_files(spec, out_dir);
  std::cout << "fixture written to " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hpa_moec: hybrid-action multi-objective ensemble-critic lab"};
  app.require_subcommand(1);

  CommonArgs train_args;
  auto* train = app.add_subcommand("train", "Train an agent");
  add_common(train, train_args);

  CommonArgs eval_args;
  std::string checkpoint, source = "sim", data_flag;
  int episodes_flag = -1;
  bool traces = false;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  add_common(eval, eval_args);
  eval->add_option("--checkpoint", checkpoint, "Agent checkpoint directory")
      ->required();
  eval->add_option("--episodes", episodes_flag, "Episode count");
  eval->add_option("--source", source, "sim or highd");
  eval->add_option("--data", data_flag, "HighD-format data directory");
  eval->add_flag("--traces", traces, "Write per-episode trajectory/reward CSVs");

  CommonArgs replay_args;
  std::string r_checkpoint, r_data;
  int r_episodes = -1;
  bool r_traces = false;
  auto* replay = app.add_subcommand("replay", "Replay a HighD-format recording");
  add_common(replay, replay_args);
  replay->add_option("--checkpoint", r_checkpoint, "Agent checkpoint directory")
      ->required();
  replay->add_option("--data", r_data, "HighD-format data directory")->required();
  replay->add_option("--episodes", r_episodes, "Episode count");
  replay->add_flag("--traces", r_traces, "Write per-episode CSVs");

  CommonArgs ablate_args;
  std::string modes = "full,hpa_mo,hpa,da_mo";
  auto* ablate = app.add_subcommand("ablate", "Train and compare ablation modes");
  add_common(ablate, ablate_args);
  ablate->add_option("--modes", modes, "Comma-separated modes");

  std::string f_kind = "const_vel", f_out = "fixture";
  int f_vehicles = 3, f_lanes = 3;
  double f_duration = 20.0, f_rate = 25.0;
  std::uint64_t f_seed = 1;
  bool f_opposite = false;
  auto* fixture = app.add_subcommand("fixture", "Generate synthetic recordings");
  fixture->add_option("--kind", f_kind,
                      "empty|const_vel|platoon|cut_in|free_flow|trap");
  fixture->add_option("--vehicles", f_vehicles, "Vehicle count");
  fixture->add_option("--duration", f_duration, "Seconds");
  fixture->add_option("--frame-rate", f_rate, "Hz");
  fixture->add_option("--lanes", f_lanes, "Lane count");
  fixture->add_option("--seed", f_seed, "Generator seed");
  fixture->add_flag("--opposite", f_opposite, "Emit into the mirrored region");
  fixture->add_option("--out", f_out, "Output directory");

  try {
    app.parse(argc, argv);
    if (train->parsed()) return cmd_train(train_args);
    if (eval->parsed())
      return cmd_eval(eval_args, checkpoint, episodes_flag, source, data_flag, traces);
    if (replay->parsed())
      return cmd_eval(replay_args, r_checkpoint, r_episodes, "highd", r_data,
                      r_traces);
    if (ablate->parsed()) return cmd_ablate(ablate_args, modes);
    if (fixture->parsed())
      return cmd_fixture(f_kind, f_vehicles, f_duration, f_rate, f_lanes, f_seed,
                         f_opposite, f_out);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
