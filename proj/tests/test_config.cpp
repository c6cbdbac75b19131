#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "irbridge/config.hpp"

using namespace irbridge;

TEST_CASE("config JSON merges over defaults and round-trips") {
  const AppConfig base = default_config();
  CHECK(base.bridge.kind == "irsde");
  CHECK(base.bridge.lambda == 2.0);
  CHECK(base.gen.kind == "ddpm-linear");
  CHECK(base.schedule.preset == "setting8");

  const AppConfig merged = load_config_json(R"({
    "bridge": {"kind": "goub", "lambda": 0.5},
    "schedule": {"n_steps": 40},
    "seed": 99
  })");
  CHECK(merged.bridge.kind == "goub");
  CHECK(merged.bridge.lambda == 0.5);
  CHECK(merged.bridge.theta_bar_total == base.bridge.theta_bar_total);  // untouched
  CHECK(merged.schedule.n_steps == 40);
  CHECK(merged.schedule.preset == "setting8");
  CHECK(merged.seed == 99);

  // Canonical text reparses to the same configuration.
  const AppConfig back = load_config_json(config_to_json(merged));
  CHECK(config_to_json(back) == config_to_json(merged));
  CHECK(config_hash_hex(back) == config_hash_hex(merged));
}

TEST_CASE("factories reject unknown names") {
  AppConfig config = default_config();
  config.bridge.kind = "nope";
  CHECK_THROWS_AS(make_bridge_path(config.bridge), std::invalid_argument);
  config.gen.kind = "nope";
  CHECK_THROWS_AS(make_gen_path(config.gen), std::invalid_argument);
  CHECK_THROWS_AS(make_named_path("nope", default_config()), std::invalid_argument);
  CHECK_THROWS_AS(denoiser_kind("nope"), std::invalid_argument);
  config = default_config();
  config.bridge.theta_schedule = "nope";
  CHECK_THROWS_AS(make_bridge_params(config.bridge), std::invalid_argument);
}

TEST_CASE("builtin tasks are realized deterministically from the seed") {
  for (const char* name : {"gmm", "mask", "dim", "blur"}) {
    const TaskInstance a = make_builtin_task(name, 42);
    const TaskInstance b = make_builtin_task(name, 42);
    const TaskInstance c = make_builtin_task(name, 43);
    INFO(name);
    CHECK(a.x0 == b.x0);
    CHECK(a.x_lq == b.x_lq);
    CHECK(a.x0 != c.x0);
    CHECK(a.x_lq.size() == a.x0.size());
    CHECK(a.psnr_peak > 0.0);
  }
  CHECK(make_builtin_task("gmm", 1).x0.size() == 2);
  CHECK(make_builtin_task("mask", 1).x0.size() == 256);
  CHECK_THROWS_AS(make_builtin_task("nope", 1), std::invalid_argument);

  // The mask realization honors its degradation: dropped pixels read zero.
  const TaskInstance mask = make_builtin_task("mask", 7);
  int dropped = 0;
  for (Eigen::Index k = 0; k < 256; ++k) {
    if (mask.degradation.A(k, k) == 0.0) {
      CHECK(mask.x_lq[k] == 0.0);
      ++dropped;
    } else {
      CHECK(mask.x_lq[k] == mask.x0[k]);
    }
  }
  CHECK(dropped > 64);
  CHECK(dropped < 192);
}

TEST_CASE("task JSON files load both prior families") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path();

  const fs::path field_path = dir / "irbridge_task_field.json";
  {
    std::ofstream f(field_path);
    f << R"({
      "name": "tiny-field", "psnr_peak": 1.5,
      "prior": {"type": "field", "height": 4, "width": 4,
                 "length_scale": 1.5, "variance": 0.04, "mean": 0.5},
      "degradation": {"type": "dimming", "a": 0.4, "noise_std": 0.05}
    })";
  }
  const TaskInstance field_task = load_task(field_path.string(), 5);
  CHECK(field_task.name == "tiny-field");
  CHECK(field_task.x0.size() == 16);
  CHECK(field_task.psnr_peak == 1.5);

  const fs::path gmm_path = dir / "irbridge_task_gmm.json";
  {
    std::ofstream f(gmm_path);
    f << R"({
      "name": "two-blob", "psnr_peak": 3.0,
      "prior": {"type": "gmm", "weights": [0.6, 0.4],
                 "means": [[1.0, 0.0], [-1.0, 0.5]],
                 "covs": [[[0.2, 0.0], [0.0, 0.2]], [[0.3, 0.1], [0.1, 0.3]]]},
      "degradation": {"type": "identity", "noise_std": 0.1}
    })";
  }
  const TaskInstance gmm_task = load_task(gmm_path.string(), 5);
  CHECK(gmm_task.x0.size() == 2);
  CHECK(gmm_task.prior->gmm.components.size() == 2);

  CHECK_THROWS(load_task((dir / "no_such_file.json").string(), 5));
  fs::remove(field_path);
  fs::remove(gmm_path);
}

TEST_CASE("trajectory serialization carries the documented surfaces") {
  const AppConfig config = default_config();
  Trajectory traj;
  traj.seed = 4;
  StepRecord rec;
  rec.i = 0.5;
  rec.j = 0.7;
  rec.state = Eigen::VectorXd::Constant(2, 0.25);
  rec.x_hat0 = Eigen::VectorXd::Constant(2, 0.5);
  rec.mse_xhat = 0.01;
  rec.psnr_xhat = 20.0;
  rec.mse_state = 0.04;
  rec.psnr_state = 14.0;
  traj.steps.push_back(rec);
  traj.final_estimate = Eigen::VectorXd::Constant(2, 0.5);
  traj.final_mse = 0.01;
  traj.final_psnr = 20.0;

  TaskInstance task = make_builtin_task("gmm", 4);
  const std::string json = trajectory_to_json(traj, config, task, "irbridge");
  for (const char* key : {"\"config\"", "\"seed\"", "\"steps\"", "\"final\"", "\"metrics\"",
                          "\"mode\""})
    CHECK(json.find(key) != std::string::npos);

  const std::string csv = trajectory_steps_csv(traj);
  CHECK(csv.rfind("index,i,j,mse_xhat,psnr_xhat,mse_state,psnr_state\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
}
