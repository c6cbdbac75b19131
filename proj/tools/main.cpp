// irbridge: restoration-bridge transition toolkit CLI.
//
// Exit codes: 0 success, 1 verification/run failure, 2 usage or config error.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <json.hpp>

#include "irbridge/acceptance.hpp"
#include "irbridge/config.hpp"
#include "irbridge/csv.hpp"
#include "irbridge/engine.hpp"
#include "irbridge/numerics.hpp"
#include "irbridge/schedule.hpp"
#include "irbridge/verify.hpp"

namespace {

using namespace irbridge;
using njson = nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot open for writing: " + path);
  f << text;
}

njson load_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot open: " + path);
  try {
    return njson::parse(f);
  } catch (const std::exception& e) {
    throw UsageError(std::string("bad JSON in ") + path + ": " + e.what());
  }
}

AppConfig config_from_option(const std::string& path) {
  if (path.empty()) return default_config();
  try {
    return load_config_file(path);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

Eigen::VectorXd vector_from_json(const njson& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// --- paths dump -------------------------------------------------------------

int cmd_paths_dump(const std::string& path_name, int grid, const std::string& out,
                   const std::string& config_path) {
  const AppConfig config = config_from_option(config_path);
  std::unique_ptr<Path> path;
  try {
    path = make_named_path(path_name, config);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  CsvWriter csv({"tau", "f", "b_mul", "sigma"});
  for (int k = 0; k <= grid; ++k) {
    const double tau = static_cast<double>(k) / grid;
    const PathCoefficients c = path->coeffs(tau);
    csv.add_row({tau, c.f, c.b_mul, c.sigma});
  }
  if (out.empty())
    std::fputs(csv.str().c_str(), stdout);
  else
    csv.write_file(out);
  return 0;
}

// --- critical dump ----------------------------------------------------------

int cmd_critical_dump(const std::string& bridge_name, const std::string& gen_name,
                      std::vector<double> lambdas, int grid, const std::string& out,
                      const std::string& config_path) {
  AppConfig config = config_from_option(config_path);
  config.bridge.kind = bridge_name;
  config.gen.kind = gen_name;
  BridgeKind kind;
  BridgeParams params;
  std::unique_ptr<Path> gen;
  try {
    kind = bridge_kind(config.bridge);
    params = make_bridge_params(config.bridge);
    gen = make_gen_path(config.gen);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  if (lambdas.empty()) lambdas = {config.bridge.lambda};
  const CriticalCurve curve = critical_curve(kind, params, *gen, lambdas, grid);
  if (out.empty())
    std::fputs(curve.to_csv().c_str(), stdout);
  else
    write_text(out, curve.to_csv());
  return 0;
}

// --- transition check -------------------------------------------------------

int cmd_transition_check(const std::string& config_path, std::optional<std::uint64_t> seed,
                         int threads) {
  const njson j = load_json_file(config_path);
  AppConfig app = default_config();
  try {
    app = load_config_json(j.dump());
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  MarginalTestConfig cfg;
  cfg.pairs = {{0.15, 0.25}, {0.3, 0.45}, {0.5, 0.65}, {0.7, 0.8}, {0.9, 0.95}};
  if (j.contains("pairs")) {
    cfg.pairs.clear();
    for (const auto& p : j.at("pairs"))
      cfg.pairs.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
  }
  cfg.sigmas_per_pair = j.value("sigmas_per_pair", 3);
  if (j.contains("sigmas")) cfg.explicit_sigmas = j.at("sigmas").get<std::vector<double>>();
  cfg.n_samples = j.value("n_samples", std::int64_t{200000});
  cfg.n_sigma = j.value("n_sigma", 4.0);
  cfg.var_tol = j.value("var_tol", 0.02);
  cfg.x0 = j.contains("x0") ? vector_from_json(j.at("x0"))
                            : (Eigen::VectorXd(4) << 1.7, -0.4, 0.9, 0.1).finished();
  cfg.x_lq = j.contains("x_lq") ? vector_from_json(j.at("x_lq"))
                                : (Eigen::VectorXd(4) << 1.0, 0.3, -0.2, 0.6).finished();
  if (!seed && !j.contains("seed"))
    throw UsageError("transition check: --seed or config \"seed\" is required");
  cfg.seed = seed ? *seed : j.at("seed").get<std::uint64_t>();
  cfg.threads = threads;

  const auto bridge = make_bridge_path(app.bridge);
  const auto gen = make_gen_path(app.gen);
  const Report report = transition_marginal_test(*bridge, *gen, cfg);
  std::printf("seed=%llu config=%s\n", static_cast<unsigned long long>(cfg.seed),
              to_hex(fnv1a(j.dump())).c_str());
  std::fputs(report.to_text().c_str(), stdout);
  return report.all_pass() ? 0 : 1;
}

// --- sde check ---------------------------------------------------------------

int cmd_sde_check(const std::string& config_path, std::optional<std::uint64_t> seed,
                  int threads) {
  const njson j = load_json_file(config_path);
  AppConfig app;
  try {
    app = load_config_json(j.dump());
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  SdeCrosscheckConfig cfg;
  if (j.contains("checkpoints")) cfg.checkpoints = j.at("checkpoints").get<std::vector<double>>();
  cfg.n_trajectories = j.value("n_trajectories", std::int64_t{100000});
  cfg.n_steps = j.value("n_steps", 2000);
  cfg.tolerance = j.value("tolerance", 0.02);
  cfg.pin_tolerance = j.value("pin_tolerance", 1e-2);
  cfg.x0 = j.value("x0", 1.7);
  cfg.x_lq = j.value("x_lq", 1.0);
  if (!seed && !j.contains("seed"))
    throw UsageError("sde check: --seed or config \"seed\" is required");
  cfg.seed = seed ? *seed : j.at("seed").get<std::uint64_t>();
  cfg.threads = threads;

  const Report report =
      sde_crosscheck(bridge_kind(app.bridge), make_bridge_params(app.bridge), cfg);
  std::printf("seed=%llu config=%s\n", static_cast<unsigned long long>(cfg.seed),
              to_hex(fnv1a(j.dump())).c_str());
  std::fputs(report.to_text().c_str(), stdout);
  return report.all_pass() ? 0 : 1;
}

// --- schedule emit / validate -------------------------------------------------

int cmd_schedule_emit(const std::string& preset_name, int steps, const std::string& out,
                      const std::string& config_path) {
  const AppConfig config = config_from_option(config_path);
  SchedulePolicy policy;
  try {
    policy = preset(preset_name);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  const auto bridge = make_bridge_path(config.bridge);
  const auto gen = make_gen_path(config.gen);
  ScheduleBuildOptions opts;
  opts.j_min = config.schedule.j_min;
  opts.i_start = config.schedule.i_start;
  const TimestepSchedule schedule = build_schedule(policy, steps, *bridge, *gen, opts);
  if (out.empty())
    std::fputs(schedule_to_csv(schedule).c_str(), stdout);
  else
    write_schedule_csv(schedule, out);
  return 0;
}

int cmd_schedule_validate(const std::string& schedule_path, const std::string& config_path) {
  const AppConfig config = config_from_option(config_path);
  TimestepSchedule schedule;
  try {
    schedule = read_schedule_csv(schedule_path);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  const auto bridge = make_bridge_path(config.bridge);
  const auto gen = make_gen_path(config.gen);
  const FeasibilityReport report = validate_schedule(schedule, *bridge, *gen);
  for (std::size_t k = 0; k < report.steps.size(); ++k) {
    const StepCheck& s = report.steps[k];
    std::printf("step %3zu i=%-10.6g j=%-10.6g %s forward=%s reverse=%s margin=%.6g\n", k, s.i,
                s.j, s.source_degenerate ? "degenerate" : "ok        ",
                s.forward_ok ? "ok" : "VIOLATION", s.reverse_ok ? "ok" : "VIOLATION",
                s.forward_margin);
  }
  std::printf("forward_violations=%d reverse_violations=%d degenerate_steps=%d verdict=%s\n",
              report.forward_violations, report.reverse_violations, report.degenerate_steps,
              report.ok() ? "ok" : "infeasible");
  return report.ok() ? 0 : 1;
}

// --- run ----------------------------------------------------------------------

int cmd_run(const std::string& mode, const std::string& task_name,
            const std::string& schedule_path, const std::string& denoiser_name,
            std::uint64_t seed, int steps, const std::string& out_dir,
            const std::string& config_path) {
  AppConfig config = config_from_option(config_path);
  config.seed = seed;
  config.task.name = task_name;
  config.run.denoiser = denoiser_name;

  TaskInstance task = [&] {
    try {
      return load_task(task_name, seed);
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
  }();
  const auto gen = make_gen_path(config.gen);
  const auto bridge = make_bridge_path(config.bridge);

  Trajectory traj;
  if (mode == "irbridge") {
    if (schedule_path.empty()) throw UsageError("run --mode irbridge needs --schedule FILE.csv");
    TimestepSchedule schedule;
    try {
      schedule = read_schedule_csv(schedule_path);
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
    const auto denoiser = make_denoiser(denoiser_kind(denoiser_name), task);
    RunOptions opts;
    opts.mean_init = config.run.mean_init;
    opts.skip_degenerate_initial = config.run.skip_degenerate_initial;
    Rng rng(seed, stream_id(0xC0, 0));
    traj = irbridge_run(task, schedule, *denoiser, *bridge, *gen, opts, rng);
  } else if (mode == "generative") {
    const auto denoiser = make_denoiser(denoiser_kind(denoiser_name), task);
    Rng rng(seed, stream_id(0xC0, 1));
    traj = generative_run(task, steps, *denoiser, *gen, config.schedule.j_min, rng);
  } else if (mode == "bridge-native") {
    const BridgeParams params = make_bridge_params(config.bridge);
    std::shared_ptr<const Prior> prior = task.prior;
    if (denoiser_name != "uncond")
      prior = std::make_shared<Prior>(condition_prior(*task.prior, task.degradation, task.x_lq));
    const ScoreFn score_fn = make_score_fn(prior, params, task.x_lq);
    RunOptions opts;
    opts.mean_init = config.run.mean_init;
    Rng rng(seed, stream_id(0xC0, 2));
    traj = bridge_native_run(task, steps, params, score_fn, opts, rng);
  } else {
    throw UsageError("unknown run mode: " + mode);
  }
  traj.seed = seed;

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw UsageError("cannot create output dir: " + out_dir);
  write_text(out_dir + "/trajectory.json", trajectory_to_json(traj, config, task, mode));
  write_text(out_dir + "/steps.csv", trajectory_steps_csv(traj));
  std::printf("final_mse=%.6g final_psnr=%.6g steps=%zu -> %s\n", traj.final_mse,
              traj.final_psnr, traj.steps.size(), out_dir.c_str());
  return 0;
}

// --- compare -------------------------------------------------------------------

int cmd_compare(const std::string& config_path, std::optional<std::uint64_t> seed_opt,
                const std::string& out) {
  const njson j = load_json_file(config_path);
  AppConfig app;
  try {
    app = load_config_json(j.dump());
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  const int n_seeds = j.value("n_seeds", 10);
  if (!seed_opt && !j.contains("seed"))
    throw UsageError("compare: --seed or config \"seed\" is required");
  const std::uint64_t seed = seed_opt ? *seed_opt : j.at("seed").get<std::uint64_t>();

  const auto bridge = make_bridge_path(app.bridge);
  const auto gen = make_gen_path(app.gen);

  std::printf("seed=%llu config=%s\n", static_cast<unsigned long long>(seed),
              to_hex(fnv1a(j.dump())).c_str());
  CsvWriter csv({"seed", "bridge_cond_mse", "bridge_cond_psnr", "gen_cond_mse", "gen_cond_psnr",
                 "bridge_uncond_mse"});
  int bridge_wins = 0, cond_wins = 0;
  for (int s = 0; s < n_seeds; ++s) {
    std::uint64_t mix = seed ^ (0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(s) + 1));
    const std::uint64_t task_seed = splitmix64(mix);
    const TaskInstance task = load_task(app.task.name, task_seed);
    const auto cond = make_denoiser(DenoiserKind::cond, task);
    const auto uncond = make_denoiser(DenoiserKind::uncond, task);
    ScheduleBuildOptions opts;
    opts.j_min = app.schedule.j_min;
    const TimestepSchedule schedule =
        build_schedule(preset(app.schedule.preset), app.schedule.n_steps, *bridge, *gen, opts);

    Rng rng_b(task_seed, stream_id(0xCB, 0));
    const Trajectory bridge_traj =
        irbridge_run(task, schedule, *cond, *bridge, *gen, RunOptions{}, rng_b);
    Rng rng_g(task_seed, stream_id(0xCB, 1));
    const Trajectory gen_traj =
        generative_run(task, app.schedule.n_steps, *cond, *gen, app.schedule.j_min, rng_g);
    Rng rng_u(task_seed, stream_id(0xCB, 0));
    const Trajectory uncond_traj =
        irbridge_run(task, schedule, *uncond, *bridge, *gen, RunOptions{}, rng_u);

    if (bridge_traj.final_psnr >= gen_traj.final_psnr) ++bridge_wins;
    if (uncond_traj.final_mse > bridge_traj.final_mse) ++cond_wins;
    csv.add_row({static_cast<double>(s), bridge_traj.final_mse, bridge_traj.final_psnr,
                 gen_traj.final_mse, gen_traj.final_psnr, uncond_traj.final_mse});
  }
  std::fputs(csv.str().c_str(), stdout);
  std::printf("bridge_psnr>=generative_psnr on %d/%d seeds\n", bridge_wins, n_seeds);
  std::printf("uncond_mse>cond_mse on %d/%d seeds\n", cond_wins, n_seeds);
  if (!out.empty()) write_text(out, csv.str());
  return 0;
}

// --- verify all ------------------------------------------------------------------

int cmd_verify_all(std::uint64_t seed, int threads, const std::string& out) {
  AcceptanceOptions options;
  options.seed = seed;
  options.threads = threads;
  options.check_determinism = true;
  const AcceptanceReport report = run_acceptance(options);
  std::fputs(report.to_text().c_str(), stdout);
  if (!out.empty()) write_text(out, report.to_text());
  return report.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"restoration-bridge transition toolkit"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = hardware)");

  // paths dump
  auto* paths_cmd = app.add_subcommand("paths", "path coefficient tables");
  paths_cmd->require_subcommand(1);
  auto* paths_dump = paths_cmd->add_subcommand("dump", "dump coefficients over a time grid");
  std::string pd_path = "irsde", pd_out, pd_config;
  int pd_grid = 100;
  paths_dump->add_option("--path", pd_path,
                         "ddpm|ddpm-linear|ddpm-sqrtlinear|rf|irsde|goub|rddm|diffuir");
  paths_dump->add_option("--grid", pd_grid, "grid intervals over [0,1]");
  paths_dump->add_option("--out", pd_out, "output CSV (stdout when omitted)");
  paths_dump->add_option("--config", pd_config, "config JSON");

  // critical dump
  auto* critical_cmd = app.add_subcommand("critical", "critical-timestep curves");
  critical_cmd->require_subcommand(1);
  auto* critical_dump = critical_cmd->add_subcommand("dump", "dump critical curves");
  std::string cd_bridge = "irsde", cd_gen = "ddpm-linear", cd_out, cd_config;
  std::vector<double> cd_lambdas;
  int cd_grid = 100;
  critical_dump->add_option("--bridge", cd_bridge, "irsde|goub");
  critical_dump->add_option("--gen", cd_gen, "ddpm-linear|ddpm-sqrtlinear|rf");
  critical_dump->add_option("--lambda", cd_lambdas, "lambda values")->delimiter(',');
  critical_dump->add_option("--grid", cd_grid, "source-time grid intervals");
  critical_dump->add_option("--out", cd_out, "output CSV (stdout when omitted)");
  critical_dump->add_option("--config", cd_config, "config JSON");

  // transition check
  auto* transition_cmd = app.add_subcommand("transition", "transition-equation checks");
  transition_cmd->require_subcommand(1);
  auto* transition_check = transition_cmd->add_subcommand("check", "Monte Carlo marginal test");
  std::string tc_config;
  std::optional<std::uint64_t> tc_seed;
  transition_check->add_option("--config", tc_config, "config JSON")->required();
  transition_check->add_option("--seed", tc_seed, "seed override");

  // sde check
  auto* sde_cmd = app.add_subcommand("sde", "simulator cross-checks");
  sde_cmd->require_subcommand(1);
  auto* sde_check = sde_cmd->add_subcommand("check", "EM vs closed-form marginals");
  std::string sc_config;
  std::optional<std::uint64_t> sc_seed;
  sde_check->add_option("--config", sc_config, "config JSON")->required();
  sde_check->add_option("--seed", sc_seed, "seed override");

  // schedule emit / validate
  auto* schedule_cmd = app.add_subcommand("schedule", "timestep schedules");
  schedule_cmd->require_subcommand(1);
  auto* schedule_emit = schedule_cmd->add_subcommand("emit", "emit a preset schedule");
  std::string se_preset = "setting8", se_out, se_config;
  int se_steps = 100;
  schedule_emit->add_option("--preset", se_preset, "setting1..setting8")->required();
  schedule_emit->add_option("--steps", se_steps, "schedule length")->required();
  schedule_emit->add_option("--out", se_out, "output CSV (stdout when omitted)");
  schedule_emit->add_option("--config", se_config, "config JSON");
  auto* schedule_validate = schedule_cmd->add_subcommand("validate", "feasibility report");
  std::string sv_schedule, sv_config;
  schedule_validate->add_option("--schedule", sv_schedule, "schedule CSV")->required();
  schedule_validate->add_option("--config", sv_config, "config JSON");

  // run
  auto* run_cmd = app.add_subcommand("run", "single inference run");
  std::string r_mode = "irbridge", r_task = "mask", r_schedule, r_denoiser = "cond", r_out;
  std::uint64_t r_seed = 0;
  int r_steps = 100;
  run_cmd->add_option("--mode", r_mode, "irbridge|generative|bridge-native");
  run_cmd->add_option("--task", r_task, "builtin task name or task JSON file");
  run_cmd->add_option("--schedule", r_schedule, "schedule CSV (irbridge mode)");
  run_cmd->add_option("--denoiser", r_denoiser, "cond|uncond|perfect");
  run_cmd->add_option("--seed", r_seed, "run seed")->required();
  run_cmd->add_option("--steps", r_steps, "steps for generative/bridge-native modes");
  run_cmd->add_option("--out", r_out, "output directory")->required();
  std::string r_config;
  run_cmd->add_option("--config", r_config, "config JSON");

  // compare
  auto* compare_cmd = app.add_subcommand("compare", "paired bridge/generative study");
  std::string cp_config, cp_out;
  std::optional<std::uint64_t> cp_seed;
  compare_cmd->add_option("--config", cp_config, "config JSON")->required();
  compare_cmd->add_option("--seed", cp_seed, "seed override");
  compare_cmd->add_option("--out", cp_out, "also write the table CSV here");

  // verify all
  auto* verify_cmd = app.add_subcommand("verify", "acceptance suite");
  verify_cmd->require_subcommand(1);
  auto* verify_all = verify_cmd->add_subcommand("all", "run every acceptance criterion");
  std::uint64_t v_seed = 0;
  std::string v_out;
  verify_all->add_option("--seed", v_seed, "suite seed")->required();
  verify_all->add_option("--out", v_out, "also write the report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n" << app.help() << std::flush;
    return 2;
  }

  try {
    if (*paths_dump) return cmd_paths_dump(pd_path, pd_grid, pd_out, pd_config);
    if (*critical_dump)
      return cmd_critical_dump(cd_bridge, cd_gen, cd_lambdas, cd_grid, cd_out, cd_config);
    if (*transition_check) return cmd_transition_check(tc_config, tc_seed, threads);
    if (*sde_check) return cmd_sde_check(sc_config, sc_seed, threads);
    if (*schedule_emit) return cmd_schedule_emit(se_preset, se_steps, se_out, se_config);
    if (*schedule_validate) return cmd_schedule_validate(sv_schedule, sv_config);
    if (*run_cmd)
      return cmd_run(r_mode, r_task, r_schedule, r_denoiser, r_seed, r_steps, r_out, r_config);
    if (*compare_cmd) return cmd_compare(cp_config, cp_seed, cp_out);
    if (*verify_all) return cmd_verify_all(v_seed, threads, v_out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << app.help();
  return 2;
}
