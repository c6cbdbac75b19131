#include "irbridge/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "irbridge/csv.hpp"
#include "irbridge/numerics.hpp"

namespace irbridge {

using json = nlohmann::ordered_json;

AppConfig default_config() { return AppConfig{}; }

namespace {

void merge_bridge(const json& j, BridgeConfig& c) {
  c.kind = j.value("kind", c.kind);
  c.lambda = j.value("lambda", c.lambda);
  c.theta_bar_total = j.value("theta_bar_total", c.theta_bar_total);
  c.horizon = j.value("horizon", c.horizon);
  c.theta_schedule = j.value("theta_schedule", c.theta_schedule);
}

void merge_gen(const json& j, GenConfig& c) {
  c.kind = j.value("kind", c.kind);
  c.n_steps = j.value("n_steps", c.n_steps);
  c.beta_min = j.value("beta_min", c.beta_min);
  c.beta_max = j.value("beta_max", c.beta_max);
  c.beta_first = j.value("beta_first", c.beta_first);
  c.beta_last = j.value("beta_last", c.beta_last);
}

void merge_schedule(const json& j, ScheduleConfig& c) {
  c.preset = j.value("preset", c.preset);
  c.n_steps = j.value("n_steps", c.n_steps);
  c.j_min = j.value("j_min", c.j_min);
  c.i_start = j.value("i_start", c.i_start);
}

void merge_task(const json& j, TaskSelection& c) {
  c.name = j.value("name", c.name);
  c.realization_seed = j.value("realization_seed", c.realization_seed);
}

void merge_run(const json& j, RunSettings& c) {
  c.denoiser = j.value("denoiser", c.denoiser);
  c.mean_init = j.value("mean_init", c.mean_init);
  c.skip_degenerate_initial = j.value("skip_degenerate_initial", c.skip_degenerate_initial);
}

}  // namespace

AppConfig load_config_json(const std::string& text) {
  AppConfig config;
  const json j = json::parse(text);
  if (j.contains("bridge")) merge_bridge(j.at("bridge"), config.bridge);
  if (j.contains("gen")) merge_gen(j.at("gen"), config.gen);
  if (j.contains("schedule")) merge_schedule(j.at("schedule"), config.schedule);
  if (j.contains("task")) merge_task(j.at("task"), config.task);
  if (j.contains("run")) merge_run(j.at("run"), config.run);
  config.seed = j.value("seed", config.seed);
  config.threads = j.value("threads", config.threads);
  return config;
}

AppConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return load_config_json(ss.str());
}

std::string config_to_json(const AppConfig& c) {
  json j;
  j["bridge"] = {{"kind", c.bridge.kind},
                 {"lambda", c.bridge.lambda},
                 {"theta_bar_total", c.bridge.theta_bar_total},
                 {"horizon", c.bridge.horizon},
                 {"theta_schedule", c.bridge.theta_schedule}};
  j["gen"] = {{"kind", c.gen.kind},         {"n_steps", c.gen.n_steps},
              {"beta_min", c.gen.beta_min}, {"beta_max", c.gen.beta_max},
              {"beta_first", c.gen.beta_first}, {"beta_last", c.gen.beta_last}};
  j["schedule"] = {{"preset", c.schedule.preset},
                   {"n_steps", c.schedule.n_steps},
                   {"j_min", c.schedule.j_min},
                   {"i_start", c.schedule.i_start}};
  j["task"] = {{"name", c.task.name}, {"realization_seed", c.task.realization_seed}};
  j["run"] = {{"denoiser", c.run.denoiser},
              {"mean_init", c.run.mean_init},
              {"skip_degenerate_initial", c.run.skip_degenerate_initial}};
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  return j.dump(2);
}

std::string config_hash_hex(const AppConfig& config) {
  // The thread count shapes execution, not results; keep it out of the stamp.
  AppConfig canonical = config;
  canonical.threads = 0;
  return to_hex(fnv1a(config_to_json(canonical)));
}

BridgeKind bridge_kind(const BridgeConfig& config) {
  if (config.kind == "irsde") return BridgeKind::irsde;
  if (config.kind == "goub") return BridgeKind::goub;
  throw std::invalid_argument("unknown bridge kind: " + config.kind);
}

BridgeParams make_bridge_params(const BridgeConfig& config) {
  BridgeParams params;
  params.lambda = config.lambda;
  params.theta_bar_total = config.theta_bar_total;
  params.horizon = config.horizon;
  if (config.theta_schedule == "constant")
    params.theta_schedule = ThetaSchedule::constant;
  else if (config.theta_schedule == "cosine")
    params.theta_schedule = ThetaSchedule::cosine;
  else
    throw std::invalid_argument("unknown theta schedule: " + config.theta_schedule);
  if (!(params.lambda > 0.0) || !(params.horizon > 0.0) || !(params.theta_bar_total >= 0.0))
    throw std::invalid_argument("bridge params out of range");
  return params;
}

std::unique_ptr<Path> make_bridge_path(const BridgeConfig& config) {
  const BridgeParams params = make_bridge_params(config);
  if (bridge_kind(config) == BridgeKind::irsde) return std::make_unique<IrSdePath>(params);
  return std::make_unique<GoubPath>(params);
}

std::unique_ptr<Path> make_gen_path(const GenConfig& config) {
  if (config.kind == "ddpm" || config.kind == "ddpm-linear")
    return std::make_unique<DdpmPath>(
        DdpmSchedule::linear(config.n_steps, config.beta_min, config.beta_max), "ddpm-linear");
  if (config.kind == "ddpm-sqrtlinear")
    return std::make_unique<DdpmPath>(
        DdpmSchedule::sqrt_linear(config.n_steps, config.beta_first, config.beta_last),
        "ddpm-sqrtlinear");
  if (config.kind == "rf") return std::make_unique<RectifiedFlowPath>();
  throw std::invalid_argument("unknown generative path: " + config.kind);
}

std::unique_ptr<Path> make_named_path(const std::string& name, const AppConfig& config) {
  if (name == "ddpm" || name == "ddpm-linear" || name == "ddpm-sqrtlinear" || name == "rf") {
    GenConfig gen = config.gen;
    gen.kind = name;
    return make_gen_path(gen);
  }
  if (name == "irsde" || name == "goub") {
    BridgeConfig bridge = config.bridge;
    bridge.kind = name;
    return make_bridge_path(bridge);
  }
  if (name == "rddm")
    return std::make_unique<ResidualPath>(ResidualSchedule::default_linear(1000, false), false);
  if (name == "diffuir")
    return std::make_unique<ResidualPath>(ResidualSchedule::default_linear(1000, true), true);
  throw std::invalid_argument("unknown path: " + name);
}

DenoiserKind denoiser_kind(const std::string& name) {
  if (name == "perfect") return DenoiserKind::perfect;
  if (name == "cond") return DenoiserKind::cond;
  if (name == "uncond") return DenoiserKind::uncond;
  throw std::invalid_argument("unknown denoiser: " + name);
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::uint32_t kStreamTaskMask = 0x744D;
constexpr std::uint32_t kStreamTaskDraw = 0x7444;

std::shared_ptr<const Prior> default_field_prior() {
  static const std::shared_ptr<const Prior> prior = std::make_shared<Prior>(
      Prior::gaussian_field(16, 16, 3.0, 0.0625, 0.5));
  return prior;
}

std::shared_ptr<const Prior> default_gmm_prior() {
  auto build = [] {
    Gmm gmm;
    GaussianComponent a, b, c;
    a.weight = 0.35;
    a.mean = Eigen::Vector2d(-2.5, -1.5);
    a.cov = (Eigen::Matrix2d() << 0.16, 0.03, 0.03, 0.10).finished();
    b.weight = 0.35;
    b.mean = Eigen::Vector2d(2.5, -1.5);
    b.cov = (Eigen::Matrix2d() << 0.12, -0.02, -0.02, 0.14).finished();
    c.weight = 0.30;
    c.mean = Eigen::Vector2d(0.0, 2.5);
    c.cov = (Eigen::Matrix2d() << 0.10, 0.0, 0.0, 0.08).finished();
    gmm.components = {a, b, c};
    return std::make_shared<Prior>(Prior::from_gmm(std::move(gmm)));
  };
  static const std::shared_ptr<const Prior> prior = build();
  return prior;
}

}  // namespace

TaskInstance make_builtin_task(const std::string& name, std::uint64_t seed) {
  Rng draw_rng(seed, stream_id(kStreamTaskDraw, 0));
  if (name == "gmm") {
    return make_task(default_gmm_prior(), LinearDegradation::dimming(2, 0.3, 0.02), 4.0, "gmm",
                     draw_rng);
  }
  if (name == "mask") {
    Rng mask_rng(seed, stream_id(kStreamTaskMask, 0));
    auto degradation = LinearDegradation::random_mask(256, 0.5, 0.0, mask_rng);
    return make_task(default_field_prior(), std::move(degradation), 1.25, "mask", draw_rng);
  }
  if (name == "dim") {
    return make_task(default_field_prior(), LinearDegradation::dimming(256, 0.3, 0.02), 1.25,
                     "dim", draw_rng);
  }
  if (name == "blur") {
    return make_task(default_field_prior(), LinearDegradation::uniform_blur(16, 16, 3, 0.01),
                     1.25, "blur", draw_rng);
  }
  throw std::invalid_argument("unknown builtin task: " + name);
}

namespace {

TaskInstance load_task_json(const std::string& path, std::uint64_t seed) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open task file: " + path);
  json j = json::parse(f);
  std::shared_ptr<const Prior> prior;
  const json& jp = j.at("prior");
  const std::string ptype = jp.at("type").get<std::string>();
  if (ptype == "field") {
    prior = std::make_shared<Prior>(Prior::gaussian_field(
        jp.value("height", 16), jp.value("width", 16), jp.value("length_scale", 3.0),
        jp.value("variance", 0.0625), jp.value("mean", 0.5), jp.value("jitter", 1e-8)));
  } else if (ptype == "gmm") {
    Gmm gmm;
    const auto weights = jp.at("weights").get<std::vector<double>>();
    const auto means = jp.at("means").get<std::vector<std::vector<double>>>();
    const auto covs = jp.at("covs").get<std::vector<std::vector<std::vector<double>>>>();
    if (weights.size() != means.size() || weights.size() != covs.size())
      throw std::runtime_error("task gmm: weights/means/covs must align");
    for (std::size_t k = 0; k < weights.size(); ++k) {
      GaussianComponent comp;
      comp.weight = weights[k];
      const auto d = static_cast<Eigen::Index>(means[k].size());
      comp.mean = Eigen::Map<const Eigen::VectorXd>(means[k].data(), d);
      comp.cov.resize(d, d);
      for (Eigen::Index r = 0; r < d; ++r)
        for (Eigen::Index c = 0; c < d; ++c)
          comp.cov(r, c) = covs[k][static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      gmm.components.push_back(std::move(comp));
    }
    prior = std::make_shared<Prior>(Prior::from_gmm(std::move(gmm)));
  } else {
    throw std::runtime_error("unknown prior type: " + ptype);
  }

  const json& jd = j.at("degradation");
  const std::string dtype = jd.at("type").get<std::string>();
  const double noise_std = jd.value("noise_std", 0.0);
  LinearDegradation degradation = LinearDegradation::identity(prior->dim(), noise_std);
  if (dtype == "identity") {
    // keep as constructed
  } else if (dtype == "dimming") {
    degradation = LinearDegradation::dimming(prior->dim(), jd.at("a").get<double>(), noise_std);
  } else if (dtype == "mask") {
    Rng mask_rng(seed, stream_id(kStreamTaskMask, 0));
    degradation = LinearDegradation::random_mask(prior->dim(), jd.value("keep_prob", 0.5),
                                                 noise_std, mask_rng);
  } else if (dtype == "blur") {
    const json& jprior = j.at("prior");
    degradation = LinearDegradation::uniform_blur(jprior.value("height", 16),
                                                  jprior.value("width", 16),
                                                  jd.value("ksize", 3), noise_std);
  } else {
    throw std::runtime_error("unknown degradation type: " + dtype);
  }

  Rng draw_rng(seed, stream_id(kStreamTaskDraw, 0));
  return make_task(std::move(prior), std::move(degradation), j.value("psnr_peak", 1.0),
                   j.value("name", std::string("custom")), draw_rng);
}

}  // namespace

TaskInstance load_task(const std::string& name_or_path, std::uint64_t seed) {
  if (name_or_path == "gmm" || name_or_path == "mask" || name_or_path == "dim" ||
      name_or_path == "blur")
    return make_builtin_task(name_or_path, seed);
  return load_task_json(name_or_path, seed);
}

// ---------------------------------------------------------------------------

namespace {

json metric_json(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;  // +inf PSNR sentinel renders as null in JSON
}

}  // namespace

std::string trajectory_to_json(const Trajectory& traj, const AppConfig& config,
                               const TaskInstance& task, const std::string& mode) {
  json j;
  j["config"] = json::parse(config_to_json(config));
  j["config"]["mode"] = mode;
  j["config"]["hash"] = config_hash_hex(config);
  j["seed"] = traj.seed;
  json steps = json::array();
  for (std::size_t k = 0; k < traj.steps.size(); ++k) {
    const auto& s = traj.steps[k];
    steps.push_back({{"index", k},
                     {"i", s.i},
                     {"j", s.j},
                     {"mse_xhat", metric_json(s.mse_xhat)},
                     {"psnr_xhat", metric_json(s.psnr_xhat)},
                     {"mse_state", metric_json(s.mse_state)},
                     {"psnr_state", metric_json(s.psnr_state)}});
  }
  j["steps"] = std::move(steps);
  j["final"] = std::vector<double>(traj.final_estimate.data(),
                                   traj.final_estimate.data() + traj.final_estimate.size());
  j["metrics"] = {{"final_mse", metric_json(traj.final_mse)},
                  {"final_psnr", metric_json(traj.final_psnr)},
                  {"mse_lq", metric_json(mse(task.x_lq, task.x0))},
                  {"psnr_lq", metric_json(psnr(task.x_lq, task.x0, task.psnr_peak))},
                  {"skipped_initial", traj.skipped_initial}};
  return j.dump(2);
}

std::string trajectory_steps_csv(const Trajectory& traj) {
  CsvWriter csv({"index", "i", "j", "mse_xhat", "psnr_xhat", "mse_state", "psnr_state"});
  for (std::size_t k = 0; k < traj.steps.size(); ++k) {
    const auto& s = traj.steps[k];
    csv.add_row({static_cast<double>(k), s.i, s.j, s.mse_xhat, s.psnr_xhat, s.mse_state,
                 s.psnr_state});
  }
  return csv.str();
}

}  // namespace irbridge
