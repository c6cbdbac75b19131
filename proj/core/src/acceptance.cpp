#include "irbridge/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <limits>

#include "irbridge/config.hpp"
#include "irbridge/engine.hpp"
#include "irbridge/numerics.hpp"
#include "irbridge/parallel.hpp"
#include "irbridge/schedule.hpp"
#include "irbridge/transition.hpp"
#include "irbridge/verify.hpp"

namespace irbridge {

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point start) {
  return std::chrono::duration<double>(clock_type::now() - start).count();
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint32_t salt) {
  std::uint64_t s = seed ^ (0xA24BAED4963EE407ull * (salt + 1));
  return splitmix64(s);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(const char* format, ...) {
  char buf[256];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

/// |lhs - rhs| measured in ulps at the scale the identity was computed at
/// (cancellation can make the raw ulp distance between near-zero results
/// meaningless; roundoff lives at the operand scale).
double ulps_at_scale(double lhs, double rhs, double scale) {
  const double s = std::max({std::abs(lhs), std::abs(rhs), std::abs(scale),
                             std::numeric_limits<double>::min()});
  const double ulp = std::ldexp(std::numeric_limits<double>::epsilon(), std::ilogb(s));
  return std::abs(lhs - rhs) / ulp;
}

struct Fixtures {
  AppConfig app;
  BridgeParams params;
  IrSdePath irsde;
  GoubPath goub;
  std::unique_ptr<Path> gen;

  static AppConfig make_app(const AcceptanceOptions& options) {
    AppConfig app = default_config();
    app.seed = options.seed;
    app.threads = options.threads;
    return app;
  }

  explicit Fixtures(const AcceptanceOptions& options)
      : app(make_app(options)),
        params(make_bridge_params(app.bridge)),
        irsde(params),
        goub(params),
        gen(make_gen_path(app.gen)) {}

  const Path& bridge(BridgeKind kind) const {
    return kind == BridgeKind::irsde ? static_cast<const Path&>(irsde)
                                     : static_cast<const Path&>(goub);
  }
};

Eigen::VectorXd fixture_x0() {
  Eigen::VectorXd v(4);
  v << 1.7, -0.4, 0.9, 0.1;
  return v;
}

Eigen::VectorXd fixture_xlq() {
  Eigen::VectorXd v(4);
  v << 1.0, 0.3, -0.2, 0.6;
  return v;
}

// --- criterion 1 -----------------------------------------------------------

CriterionResult criterion_transition_marginals(const Fixtures& fx,
                                               const AcceptanceOptions& options) {
  const auto start = clock_type::now();
  MarginalTestConfig cfg;
  cfg.pairs = {{0.15, 0.25}, {0.3, 0.45}, {0.5, 0.65}, {0.7, 0.8}, {0.9, 0.95}};
  cfg.sigmas_per_pair = 3;
  cfg.n_samples = 200000;
  cfg.n_sigma = 4.0;
  cfg.var_tol = 0.02;
  cfg.x0 = fixture_x0();
  cfg.x_lq = fixture_xlq();
  cfg.threads = options.threads;

  int passed = 0, total = 0;
  for (BridgeKind kind : {BridgeKind::irsde, BridgeKind::goub}) {
    cfg.seed = sub_seed(options.seed, kind == BridgeKind::irsde ? 0x11 : 0x12);
    const Report report = transition_marginal_test(fx.bridge(kind), *fx.gen, cfg);
    for (const auto& line : report.lines) {
      ++total;
      if (line.pass && !line.skipped) ++passed;
    }
  }
  const double elapsed = seconds_since(start);
  CriterionResult result;
  result.index = 1;
  result.name = "transition moments match destination marginals";
  result.pass = passed == total && elapsed < 30.0;
  result.detail = fmt("%d/%d moment checks passed, 4 SE / 2%% var at 2e5 draws", passed, total);
  return result;
}

// --- criterion 2 -----------------------------------------------------------

CriterionResult criterion_identities(const AcceptanceOptions& options) {
  Rng rng(sub_seed(options.seed, 0x21), 0);
  double worst = 0.0;
  const int n = 1000;
  for (int k = 0; k < n; ++k) {
    PathCoefficients src, dst;
    src.f = 0.05 + 0.95 * rng.uniform();
    dst.f = 0.05 + 0.95 * rng.uniform();
    src.sigma = 0.01 + 1.49 * rng.uniform();
    dst.sigma = 0.01 + 1.49 * rng.uniform();
    src.b_mul = -1.0 + 2.0 * rng.uniform();
    dst.b_mul = -1.0 + 2.0 * rng.uniform();
    const SigmaRange range = sigma_range(src, dst);
    const double sigma = range.lo + (range.hi - range.lo) * rng.uniform();
    const TransitionCoefficients c = transition_coeffs(src, dst, sigma);
    worst = std::max(worst, ulps_at_scale(c.alpha * src.f + c.beta, dst.f, c.alpha * src.f));
    worst = std::max(worst,
                     ulps_at_scale(c.alpha * src.b_mul + c.gamma_mul, dst.b_mul,
                                   c.alpha * src.b_mul));
    const double lhs_var = (c.alpha * src.sigma) * (c.alpha * src.sigma) + c.sigma * c.sigma;
    worst = std::max(worst, ulps_at_scale(lhs_var, dst.sigma * dst.sigma, lhs_var));
  }
  CriterionResult result;
  result.index = 2;
  result.name = "transition coefficient identities hold to <= 8 ulps";
  result.pass = worst <= 8.0;
  result.detail = fmt("worst identity error %.3g ulps over %d random tuples", worst, n);
  return result;
}

// --- criterion 3 -----------------------------------------------------------

CriterionResult criterion_forward_boundary(const Fixtures& fx) {
  double max_beta = 0.0;
  long feasible = 0, infeasible = 0, misclassified = 0;
  auto sweep = [&](const Path& bridge, double i_lo, double i_hi) {
    for (int a = 0; a < 100; ++a) {
      const double i_time = i_lo + (i_hi - i_lo) * a / 99.0;
      const PathCoefficients src = bridge.coeffs(i_time);
      for (int b = 0; b < 100; ++b) {
        const double j_time = 0.01 + (1.0 - 0.01) * b / 99.0;
        const PathCoefficients dst = fx.gen->coeffs(j_time);
        const double margin = forward_margin(src, dst);
        try {
          const TransitionCoefficients c = forward_transition_coeffs(src, dst);
          ++feasible;
          max_beta = std::max(max_beta, std::abs(c.beta));
          if (margin < 0.0 && std::abs(margin) > 1e-9) ++misclassified;
        } catch (const TransitionError& e) {
          ++infeasible;
          if (e.code() != TransitionErrc::below_critical || margin >= 0.0) ++misclassified;
        }
      }
    }
  };
  sweep(fx.irsde, 0.01, 1.0);
  sweep(fx.goub, 0.01, 0.99);
  CriterionResult result;
  result.index = 3;
  result.name = "forward boundary: |beta| < 1e-12 when feasible, BelowCritical otherwise";
  result.pass = max_beta < 1e-12 && misclassified == 0 && feasible > 0 && infeasible > 0;
  result.detail = fmt("max|beta|=%.3g over %ld feasible pairs, %ld infeasible raised", max_beta,
                      feasible, infeasible);
  return result;
}

// --- criterion 4 -----------------------------------------------------------

CriterionResult criterion_critical_timesteps(const Fixtures& fx) {
  const std::vector<double> lambdas = {0.5, 1.0, 2.0, 4.0};
  const int grid = 100;
  double max_residual = 0.0;
  bool monotone = true;
  bool origin_ok = true;
  std::vector<double> prev(grid, -std::numeric_limits<double>::infinity());
  for (double lambda : lambdas) {
    BridgeParams params = fx.params;
    params.lambda = lambda;
    const IrSdePath bridge(params);
    for (int k = 0; k < grid; ++k) {
      const double tau = static_cast<double>(k) / (grid - 1);
      const CriticalResult crit = critical_timestep(bridge.coeffs(tau), *fx.gen);
      double value;
      if (crit.found()) {
        value = crit.value;
        max_residual = std::max(max_residual, crit.residual);
      } else {
        value = std::numeric_limits<double>::infinity();
      }
      if (k == 0 && !(crit.found() && crit.value == 0.0)) origin_ok = false;
      if (value < prev[static_cast<std::size_t>(k)] - 1e-12) monotone = false;
      prev[static_cast<std::size_t>(k)] = value;
    }
  }
  CriterionResult result;
  result.index = 4;
  result.name = "critical timesteps: residual < 1e-4, nondecreasing in lambda, t(0)=0";
  result.pass = max_residual < 1e-4 && monotone && origin_ok;
  result.detail = fmt("max residual %.3g, monotone=%s, origin=%s", max_residual,
                      monotone ? "yes" : "no", origin_ok ? "yes" : "no");
  return result;
}

// --- criterion 5 -----------------------------------------------------------

CriterionResult criterion_sde_crosscheck(const Fixtures& fx, const AcceptanceOptions& options) {
  const auto start = clock_type::now();
  SdeCrosscheckConfig cfg;
  cfg.threads = options.threads;
  int passed = 0, total = 0;
  for (BridgeKind kind : {BridgeKind::irsde, BridgeKind::goub}) {
    // The unpinned bridge also gets its terminal law checked; the pinned one
    // checks the endpoint by its own max-deviation rule.
    cfg.checkpoints = kind == BridgeKind::irsde
                          ? std::vector<double>{0.1, 0.3, 0.5, 0.7, 0.9, 1.0}
                          : std::vector<double>{0.1, 0.3, 0.5, 0.7, 0.9};
    cfg.seed = sub_seed(options.seed, kind == BridgeKind::irsde ? 0x51 : 0x52);
    const Report report = sde_crosscheck(kind, fx.params, cfg);
    for (const auto& line : report.lines) {
      ++total;
      if (line.pass) ++passed;
    }
  }
  const double elapsed = seconds_since(start);
  CriterionResult result;
  result.index = 5;
  result.name = "EM simulation matches closed-form marginals (2%, pinned endpoint)";
  result.pass = passed == total && elapsed < 60.0;
  result.detail = fmt("%d/%d checkpoint checks passed, 1e5 trajectories x 2000 steps", passed,
                      total);
  return result;
}

// --- criteria 6..10 (engine) -----------------------------------------------

TimestepSchedule setting8_schedule(const Fixtures& fx, const Path& bridge) {
  ScheduleBuildOptions opts;
  opts.j_min = fx.app.schedule.j_min;
  opts.i_start = fx.app.schedule.i_start;
  return build_schedule(preset("setting8"), fx.app.schedule.n_steps, bridge, *fx.gen, opts);
}

CriterionResult criterion_exact_oracle(const Fixtures& fx, const AcceptanceOptions& options) {
  double worst = 0.0;
  std::uint32_t salt = 0x61;
  for (BridgeKind kind : {BridgeKind::irsde, BridgeKind::goub}) {
    const Path& bridge = fx.bridge(kind);
    const TimestepSchedule schedule = setting8_schedule(fx, bridge);
    for (const char* name : {"gmm", "mask", "dim"}) {
      const TaskInstance task = make_builtin_task(name, sub_seed(options.seed, salt));
      const PerfectDenoiser denoiser(task.x0);
      Rng rng(sub_seed(options.seed, salt), stream_id(0xE6, 0));
      const Trajectory traj =
          irbridge_run(task, schedule, denoiser, bridge, *fx.gen, RunOptions{}, rng);
      worst = std::max(worst, traj.final_mse);
      ++salt;
    }
  }
  CriterionResult result;
  result.index = 6;
  result.name = "exact-oracle convergence: final MSE <= 1e-10 on both bridges, all tasks";
  result.pass = worst <= 1e-10;
  result.detail = fmt("max final MSE %.3g over 6 runs", worst);
  return result;
}

CriterionResult criterion_masked_restoration(const Fixtures& fx,
                                             const AcceptanceOptions& options) {
  const TimestepSchedule schedule = setting8_schedule(fx, fx.irsde);
  std::vector<double> finals, lqs, floors;
  for (std::uint32_t s = 0; s < 10; ++s) {
    const TaskInstance task = make_builtin_task("mask", sub_seed(options.seed, 0x700 + s));
    const auto denoiser = make_denoiser(DenoiserKind::cond, task);
    Rng rng(sub_seed(options.seed, 0x700 + s), stream_id(0xE7, 0));
    const Trajectory traj =
        irbridge_run(task, schedule, *denoiser, fx.irsde, *fx.gen, RunOptions{}, rng);
    finals.push_back(traj.final_mse);
    lqs.push_back(mse(task.x_lq, task.x0));
    floors.push_back(
        mse(bayes_posterior_mean(*task.prior, task.degradation, task.x_lq), task.x0));
  }
  const double med_final = median(finals);
  const double threshold = 0.5 * median(lqs);
  const double med_floor = median(floors);
  CriterionResult result;
  result.index = 7;
  result.name = "masked restoration: median MSE under 50% of the degraded baseline";
  result.pass = med_final < threshold;
  result.detail = fmt("median MSE %.4g vs threshold %.4g (posterior-mean floor %.4g)", med_final,
                      threshold, med_floor);
  return result;
}

CriterionResult criterion_bridge_vs_generative(const Fixtures& fx,
                                               const AcceptanceOptions& options) {
  const TimestepSchedule schedule = setting8_schedule(fx, fx.irsde);
  int wins = 0;
  for (std::uint32_t s = 0; s < 10; ++s) {
    const TaskInstance task = make_builtin_task("dim", sub_seed(options.seed, 0x800 + s));
    const auto denoiser = make_denoiser(DenoiserKind::cond, task);
    Rng bridge_rng(sub_seed(options.seed, 0x800 + s), stream_id(0xE8, 0));
    const Trajectory bridge_traj =
        irbridge_run(task, schedule, *denoiser, fx.irsde, *fx.gen, RunOptions{}, bridge_rng);
    Rng gen_rng(sub_seed(options.seed, 0x800 + s), stream_id(0xE8, 1));
    const Trajectory gen_traj = generative_run(task, fx.app.schedule.n_steps, *denoiser,
                                               *fx.gen, fx.app.schedule.j_min, gen_rng);
    if (bridge_traj.final_psnr >= gen_traj.final_psnr) ++wins;
  }
  CriterionResult result;
  result.index = 8;
  result.name = "bridge run beats the from-noise generative baseline on PSNR";
  result.pass = wins >= 8;
  result.detail = fmt("bridge >= generative on %d/10 seeded runs", wins);
  return result;
}

CriterionResult criterion_cond_vs_uncond(const Fixtures& fx, const AcceptanceOptions& options) {
  const TimestepSchedule schedule = setting8_schedule(fx, fx.irsde);
  bool strict = true;
  double min_gap = std::numeric_limits<double>::infinity();
  std::vector<double> cond_mses, uncond_mses;
  for (std::uint32_t s = 0; s < 10; ++s) {
    const TaskInstance task = make_builtin_task("gmm", sub_seed(options.seed, 0x900 + s));
    const auto cond = make_denoiser(DenoiserKind::cond, task);
    const auto uncond = make_denoiser(DenoiserKind::uncond, task);
    Rng rng_c(sub_seed(options.seed, 0x900 + s), stream_id(0xE9, 0));
    Rng rng_u(sub_seed(options.seed, 0x900 + s), stream_id(0xE9, 0));
    const Trajectory traj_c =
        irbridge_run(task, schedule, *cond, fx.irsde, *fx.gen, RunOptions{}, rng_c);
    const Trajectory traj_u =
        irbridge_run(task, schedule, *uncond, fx.irsde, *fx.gen, RunOptions{}, rng_u);
    cond_mses.push_back(traj_c.final_mse);
    uncond_mses.push_back(traj_u.final_mse);
    if (!(traj_u.final_mse > traj_c.final_mse)) strict = false;
    min_gap = std::min(min_gap, traj_u.final_mse - traj_c.final_mse);
  }
  CriterionResult result;
  result.index = 9;
  result.name = "conditional oracle strictly beats unconditional on every seed";
  result.pass = strict;
  result.detail = fmt("min MSE gap %.4g; median cond %.4g, median uncond %.4g", min_gap,
                      median(cond_mses), median(uncond_mses));
  return result;
}

CriterionResult criterion_skip_rule(const Fixtures& fx, const AcceptanceOptions& options) {
  bool direct_error = false;
  try {
    sigma_range(fx.goub.coeffs(1.0), fx.gen->coeffs(0.5));
  } catch (const TransitionError& e) {
    direct_error = e.code() == TransitionErrc::source_degenerate;
  }

  const TaskInstance task = make_builtin_task("mask", sub_seed(options.seed, 0xA01));
  const TimestepSchedule schedule = setting8_schedule(fx, fx.goub);
  const auto denoiser = make_denoiser(DenoiserKind::cond, task);

  bool run_error = false;
  try {
    RunOptions no_skip;
    no_skip.skip_degenerate_initial = false;
    Rng rng(sub_seed(options.seed, 0xA01), stream_id(0xEA, 0));
    irbridge_run(task, schedule, *denoiser, fx.goub, *fx.gen, no_skip, rng);
  } catch (const TransitionError& e) {
    run_error = e.code() == TransitionErrc::source_degenerate;
  }

  Rng rng(sub_seed(options.seed, 0xA01), stream_id(0xEA, 0));
  const Trajectory traj =
      irbridge_run(task, schedule, *denoiser, fx.goub, *fx.gen, RunOptions{}, rng);
  const bool finite = std::isfinite(traj.final_mse) &&
                      traj.steps.size() == schedule.size() - 1 && traj.skipped_initial;
  const bool passing = traj.final_mse < 0.5 * mse(task.x_lq, task.x0);

  CriterionResult result;
  result.index = 10;
  result.name = "degenerate-start skip: SourceDegenerate raised, skip path passes";
  result.pass = direct_error && run_error && finite && passing;
  result.detail = fmt("errors raised=%s, skip-run final MSE %.4g over %zu steps",
                      (direct_error && run_error) ? "yes" : "no", traj.final_mse,
                      traj.steps.size());
  return result;
}

// ---------------------------------------------------------------------------

std::vector<CriterionResult> run_criteria(const AcceptanceOptions& options) {
  const Fixtures fx(options);
  std::vector<CriterionResult> criteria;
  criteria.push_back(criterion_transition_marginals(fx, options));
  criteria.push_back(criterion_identities(options));
  criteria.push_back(criterion_forward_boundary(fx));
  criteria.push_back(criterion_critical_timesteps(fx));
  criteria.push_back(criterion_sde_crosscheck(fx, options));
  criteria.push_back(criterion_exact_oracle(fx, options));
  criteria.push_back(criterion_masked_restoration(fx, options));
  criteria.push_back(criterion_bridge_vs_generative(fx, options));
  criteria.push_back(criterion_cond_vs_uncond(fx, options));
  criteria.push_back(criterion_skip_rule(fx, options));
  return criteria;
}

std::string render_criteria(const std::vector<CriterionResult>& criteria) {
  std::string out;
  for (const auto& c : criteria) {
    out += fmt("[%2d] %s %s: %s\n", c.index, c.pass ? "PASS" : "FAIL", c.name.c_str(),
               c.detail.c_str());
  }
  return out;
}

}  // namespace

bool AcceptanceReport::all_pass() const {
  for (const auto& c : criteria)
    if (!c.pass) return false;
  return true;
}

std::string AcceptanceReport::to_text() const {
  std::string out = "irbridge acceptance report\n";
  out += fmt("seed=%llu\n", static_cast<unsigned long long>(seed));
  out += "config=" + config_hash + "\n";
  out += render_criteria(criteria);
  int passed = 0;
  for (const auto& c : criteria)
    if (c.pass) ++passed;
  out += fmt("overall %s (%d/%zu criteria)\n", all_pass() ? "PASS" : "FAIL", passed,
             criteria.size());
  return out;
}

AcceptanceReport run_acceptance(const AcceptanceOptions& options) {
  AcceptanceReport report;
  report.seed = options.seed;
  AppConfig app = default_config();
  app.seed = options.seed;
  report.config_hash = config_hash_hex(app);
  report.criteria = run_criteria(options);
  if (options.check_determinism) {
    AcceptanceOptions alt = options;
    alt.threads = resolve_threads(options.threads) == 1 ? 2 : 1;
    const std::vector<CriterionResult> again = run_criteria(alt);
    const bool same = render_criteria(report.criteria) == render_criteria(again);
    CriterionResult c;
    c.index = 11;
    c.name = "determinism across runs and worker counts";
    c.pass = same;
    // The line itself must not depend on the requested worker count, or the
    // report would fail its own byte-identity requirement.
    c.detail = same ? "criterion reports byte-identical across worker counts"
                    : "criterion reports differ between worker counts";
    report.criteria.push_back(std::move(c));
  }
  return report;
}

}  // namespace irbridge
