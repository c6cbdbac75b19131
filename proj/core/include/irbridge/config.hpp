#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "irbridge/engine.hpp"
#include "irbridge/path.hpp"
#include "irbridge/schedule.hpp"
#include "irbridge/sde.hpp"
#include "irbridge/synthetic.hpp"

namespace irbridge {

struct BridgeConfig {
  std::string kind = "irsde";  // irsde | goub
  double lambda = 2.0;
  double theta_bar_total = 2.0;
  double horizon = 1.0;
  std::string theta_schedule = "constant";  // constant | cosine
};

struct GenConfig {
  std::string kind = "ddpm-linear";  // ddpm-linear | ddpm-sqrtlinear | rf
  int n_steps = 1000;
  double beta_min = 1e-4;     // ddpm-linear endpoints
  double beta_max = 0.02;
  double beta_first = 0.00085;  // ddpm-sqrtlinear endpoints
  double beta_last = 0.012;
};

struct ScheduleConfig {
  std::string preset = "setting8";
  int n_steps = 100;
  double j_min = 0.001;
  double i_start = 1.0;
};

struct TaskSelection {
  std::string name = "mask";  // builtin: mask | dim | gmm | blur, or a JSON file path
  std::uint64_t realization_seed = 1;
};

struct RunSettings {
  std::string denoiser = "cond";  // cond | uncond | perfect
  bool mean_init = false;
  bool skip_degenerate_initial = true;
};

struct AppConfig {
  BridgeConfig bridge;
  GenConfig gen;
  ScheduleConfig schedule;
  TaskSelection task;
  RunSettings run;
  std::uint64_t seed = 1;
  int threads = 0;
};

AppConfig default_config();
AppConfig load_config_json(const std::string& text);
AppConfig load_config_file(const std::string& path);
/// Canonical JSON rendering (stable key order); hashing this stamps reports.
std::string config_to_json(const AppConfig& config);
std::string config_hash_hex(const AppConfig& config);

BridgeKind bridge_kind(const BridgeConfig& config);
BridgeParams make_bridge_params(const BridgeConfig& config);
std::unique_ptr<Path> make_bridge_path(const BridgeConfig& config);
std::unique_ptr<Path> make_gen_path(const GenConfig& config);
/// Any registered path by name (ddpm | ddpm-linear | ddpm-sqrtlinear | rf |
/// irsde | goub | rddm | diffuir); bridge/gen parameters come from config.
std::unique_ptr<Path> make_named_path(const std::string& name, const AppConfig& config);

DenoiserKind denoiser_kind(const std::string& name);

/// Builtin desk-scale tasks, realized deterministically from the seed:
///   gmm   2-d 3-component mixture + dimming (a=0.3, noise 0.02)
///   mask  16x16 RBF field + 50% random mask (noise-free)
///   dim   16x16 RBF field + dimming (a=0.3, noise 0.02)
///   blur  16x16 RBF field + 3x3 uniform blur (noise 0.01)
TaskInstance make_builtin_task(const std::string& name, std::uint64_t seed);
/// Accepts a builtin name or a task JSON file path.
TaskInstance load_task(const std::string& name_or_path, std::uint64_t seed);

std::string trajectory_to_json(const Trajectory& traj, const AppConfig& config,
                               const TaskInstance& task, const std::string& mode);
std::string trajectory_steps_csv(const Trajectory& traj);

}  // namespace irbridge
