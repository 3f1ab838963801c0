#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "moec/run_config.hpp"

using namespace moec;
using namespace moec::cli;

TEST_CASE("defaults carry the reference hyperparameters") {
  RunConfig cfg = default_config();
  finalize_config(cfg);
  const auto& s = cfg.settings;
  CHECK(s.agent.m_critics == 6);
  CHECK(s.agent.omega == std::vector<double>{0.4, 0.6});
  CHECK(s.agent.gamma == 0.9);
  CHECK(s.agent.alpha == 0.01);
  CHECK(s.agent.beta == 0.001);
  CHECK(s.agent.tau == 0.005);
  CHECK(s.agent.lambda == std::array<double, 4>{0.5, 0.2, 0.2, 0.1});
  CHECK(s.agent.hidden == std::vector<int>{256, 256, 256});
  CHECK(s.explore.candidate_count == 10);
  CHECK(s.explore.weight_start == 1.0);
  CHECK(s.explore.weight_floor == 0.001);
  CHECK(s.train.total_steps == 200000);
  CHECK(s.train.batch_size == 256);
  CHECK(s.train.buffer_capacity == 40000);
  CHECK(s.env.road.lane_count == 3);
  CHECK(s.env.density == 0.5);
}

TEST_CASE("assignments and overrides") {
  SUBCASE("valid override lands in the snapshot") {
    RunConfig cfg = load_config("", {"trainer.steps=1000", "env.density=0.3"});
    CHECK(cfg.settings.train.total_steps == 1000);
    CHECK(cfg.settings.env.density == 0.3);
    const auto snap = resolved_snapshot(cfg);
    CHECK(snap.find("trainer.steps = 1000") != std::string::npos);
    CHECK(snap.find("env.density = 0.3") != std::string::npos);
  }
  SUBCASE("unknown key is an error naming the key") {
    CHECK_THROWS_WITH_AS(load_config("", {"trainer.stepz=1"}),
                         doctest::Contains("trainer.stepz"), ConfigError);
  }
  SUBCASE("type errors name the key") {
    CHECK_THROWS_WITH_AS(load_config("", {"trainer.steps=abc"}),
                         doctest::Contains("trainer.steps"), ConfigError);
    CHECK_THROWS_WITH_AS(load_config("", {"reward.eff_negated=speed"}),
                         doctest::Contains("reward.eff_negated"), ConfigError);
  }
  SUBCASE("missing config file") {
    CHECK_THROWS_WITH_AS(load_config("/no/such/file.cfg", {}),
                         doctest::Contains("/no/such/file.cfg"), ConfigError);
  }
  SUBCASE("invalid combination fails validation") {
    CHECK_THROWS_AS(load_config("", {"agent.omega_safe=0.5", "agent.omega_gen=0.6"}),
                    ConfigError);
    CHECK_THROWS_AS(load_config("", {"agent.alpha=0.0001"}), ConfigError);
  }
}

TEST_CASE("config files") {
  const auto dir = std::filesystem::temp_directory_path() / "moec_cfg";
  std::filesystem::create_directories(dir);
  SUBCASE("file parsing with comments") {
    const auto path = dir / "a.cfg";
    std::ofstream f(path);
    f << "# comment\n"
      << "trainer.steps = 500   # trailing comment\n"
      << "\n"
      << "agent.hidden = 32,32\n";
    f.close();
    RunConfig cfg = load_config(path.string(), {});
    CHECK(cfg.settings.train.total_steps == 500);
    CHECK(cfg.settings.agent.hidden == std::vector<int>{32, 32});
  }
  SUBCASE("shipped profiles load") {
    const auto base = std::filesystem::path(MOEC_SOURCE_DIR);
    RunConfig def = load_config((base / "configs" / "default.cfg").string(), {});
    CHECK(def.settings.train.total_steps == 200000);
    RunConfig desk = load_config((base / "configs" / "desk.cfg").string(), {});
    CHECK(desk.settings.train.total_steps == 30000);
    CHECK(desk.settings.env.density == 0.3);
    CHECK(desk.seeds == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(desk.settings.agent.hidden == std::vector<int>{64, 64});
    // untouched keys keep the reference values
    CHECK(desk.settings.agent.m_critics == 6);
    CHECK(desk.settings.agent.alpha == 0.01);
  }
  SUBCASE("snapshot is stable across loads") {
    RunConfig a = load_config("", {"trainer.steps=123"});
    RunConfig b = load_config("", {"trainer.steps=123"});
    CHECK(resolved_snapshot(a) == resolved_snapshot(b));
  }
}

TEST_CASE("derived fields stay tied") {
  RunConfig cfg = load_config("", {"env.vehicle.steer_max=0.5",
                                   "env.accel_limit=2.5",
                                   "env.lane_width=3.6"});
  CHECK(cfg.settings.reward.steer_max == 0.5);
  CHECK(cfg.settings.stanley.steer_max == 0.5);
  CHECK(cfg.settings.pid.steer_max == 0.5);
  CHECK(cfg.settings.reward.acc_max == 2.5);
  CHECK(cfg.settings.agent.bounds.acc_limit == 2.5);
  CHECK(cfg.settings.agent.lane_width == 3.6);
  CHECK(cfg.settings.explore.schedule_steps == cfg.settings.train.total_steps);
}

TEST_CASE("cli binary exit codes") {
  const std::string bin = MOEC_CLI_PATH;
  const auto out = std::filesystem::temp_directory_path() / "moec_cli_out";
  std::filesystem::remove_all(out);
  const auto run = [&](const std::string& args) {
    const std::string cmd = bin + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
  };
  SUBCASE("missing config file exits 2") {
    CHECK(run("train --config /does/not/exist.cfg") == 2);
  }
  SUBCASE("unknown override key exits 2") {
    CHECK(run("train --override nope.key=1 --out " + out.string()) == 2);
  }
  SUBCASE("fixture generation exits 0 and writes the files") {
    CHECK(run("fixture --kind const_vel --vehicles 2 --out " + out.string()) == 0);
    CHECK(std::filesystem::exists(out / "tracks.csv"));
    CHECK(std::filesystem::exists(out / "recordingMeta.txt"));
  }
  SUBCASE("eval on a missing checkpoint exits 3") {
    CHECK(run("eval --checkpoint /does/not/exist --episodes 1 --out " +
              out.string()) == 3);
  }
  SUBCASE("tiny train run exits 0 and writes artifacts") {
    const std::string args =
        "train --override trainer.steps=60 --override trainer.batch=16 "
        "--override trainer.warmup=16 --override agent.hidden=8,8 "
        "--override env.density=0.1 --override trainer.uncertainty_trace=true "
        "--override trainer.reward_trace=true --seed 3 --out " + out.string();
    CHECK(run(args) == 0);
    CHECK(std::filesystem::exists(out / "resolved_config.txt"));
    CHECK(std::filesystem::exists(out / "seed_3" / "train_log.csv"));
    CHECK(std::filesystem::exists(out / "seed_3" / "checkpoint_final" / "manifest.txt"));
    CHECK(std::filesystem::exists(out / "seed_3" / "uncertainty_trace.csv"));
    CHECK(std::filesystem::exists(out / "seed_3" / "reward_trace.csv"));
  }
  SUBCASE("HPA_MOEC_OUT overrides --out") {
    const auto envout = std::filesystem::temp_directory_path() / "moec_env_out";
    std::filesystem::remove_all(envout);
    const std::string cmd = "HPA_MOEC_OUT=" + envout.string() + " " + bin +
                            " fixture --kind empty --out " + out.string() +
                            "/ignored > /dev/null 2>&1";
    CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    CHECK(std::filesystem::exists(envout / "tracks.csv"));
    CHECK_FALSE(std::filesystem::exists(out / "ignored"));
  }
  SUBCASE("eval with zero episodes exits 0") {
    const std::string train_args =
        "train --override trainer.steps=40 --override trainer.batch=16 "
        "--override trainer.warmup=16 --override agent.hidden=8,8 "
        "--override env.density=0.1 --seed 4 --out " + out.string();
    REQUIRE(run(train_args) == 0);
    CHECK(run("eval --checkpoint " + (out / "seed_4" / "checkpoint_final").string() +
              " --episodes 0 --out " + out.string()) == 0);
  }
  SUBCASE("replay command drives a fixture recording") {
    REQUIRE(run("fixture --kind free_flow --vehicles 5 --duration 15 --out " +
                (out / "fx").string()) == 0);
    const std::string train_args =
        "train --override trainer.steps=40 --override trainer.batch=16 "
        "--override trainer.warmup=16 --override agent.hidden=8,8 "
        "--override env.density=0.1 --seed 5 --out " + out.string();
    REQUIRE(run(train_args) == 0);
    CHECK(run("replay --checkpoint " + (out / "seed_5" / "checkpoint_final").string() +
              " --data " + (out / "fx").string() + " --episodes 2 --out " +
              (out / "replay").string()) == 0);
    CHECK(std::filesystem::exists(out / "replay" / "metrics.csv"));
    CHECK(std::filesystem::exists(out / "replay" / "summary.txt"));
  }
  SUBCASE("ablate writes the comparative summary") {
    const std::string args =
        "ablate --modes full,da_mo --override trainer.steps=50 "
        "--override trainer.batch=16 --override trainer.warmup=16 "
        "--override agent.hidden=8,8 --override env.density=0.1 "
        "--override eval.episodes=1 --override env.episode_cap_s=10 "
        "--seed 6 --out " + (out / "abl").string();
    CHECK(run(args) == 0);
    std::ifstream f(out / "abl" / "ablation_summary.csv");
    REQUIRE(f.good());
    std::string line;
    int lines = 0;
    while (std::getline(f, line)) ++lines;
    CHECK(lines == 3);  // header + two modes
  }
}
