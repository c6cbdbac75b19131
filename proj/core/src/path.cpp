#include "irbridge/path.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace irbridge {

double PathCoefficients::noise_to_signal() const {
  if (f > 0.0) return sigma / f;
  return sigma > 0.0 ? std::numeric_limits<double>::infinity()
                     : std::numeric_limits<double>::quiet_NaN();
}

Eigen::VectorXd reparam_sample(const PathCoefficients& coeffs, const Eigen::VectorXd& x0,
                               const Eigen::VectorXd& x_lq, const Eigen::VectorXd& noise) {
  if (x0.size() != x_lq.size() || x0.size() != noise.size())
    throw std::invalid_argument("reparam_sample: dimension mismatch");
  return coeffs.f * x0 + coeffs.b_mul * x_lq + coeffs.sigma * noise;
}

// ---------------------------------------------------------------------------

DdpmSchedule DdpmSchedule::from_betas(std::vector<double> betas) {
  DdpmSchedule s;
  s.n_steps = static_cast<int>(betas.size());
  s.betas = std::move(betas);
  s.alpha_bars.resize(s.betas.size());
  double prod = 1.0;
  for (std::size_t k = 0; k < s.betas.size(); ++k) {
    const double beta = s.betas[k];
    if (!(beta > 0.0 && beta < 1.0))
      throw std::invalid_argument("DdpmSchedule: betas must lie in (0,1)");
    prod *= 1.0 - beta;
    s.alpha_bars[k] = prod;
  }
  return s;
}

DdpmSchedule DdpmSchedule::linear(int n_steps, double beta_min, double beta_max) {
  if (n_steps < 1) throw std::invalid_argument("DdpmSchedule: n_steps must be positive");
  std::vector<double> betas(static_cast<std::size_t>(n_steps));
  for (int k = 0; k < n_steps; ++k) {
    const double u = n_steps == 1 ? 0.0 : static_cast<double>(k) / (n_steps - 1);
    betas[static_cast<std::size_t>(k)] = beta_min + (beta_max - beta_min) * u;
  }
  return from_betas(std::move(betas));
}

DdpmSchedule DdpmSchedule::sqrt_linear(int n_steps, double beta_first, double beta_last) {
  if (n_steps < 1) throw std::invalid_argument("DdpmSchedule: n_steps must be positive");
  const double a = std::sqrt(beta_first);
  const double b = std::sqrt(beta_last);
  std::vector<double> betas(static_cast<std::size_t>(n_steps));
  for (int k = 0; k < n_steps; ++k) {
    const double u = n_steps == 1 ? 0.0 : static_cast<double>(k) / (n_steps - 1);
    const double root = a + (b - a) * u;
    betas[static_cast<std::size_t>(k)] = root * root;
  }
  return from_betas(std::move(betas));
}

PathCoefficients ddpm_coeffs(const DdpmSchedule& schedule, int step) {
  if (step < 0 || step > schedule.n_steps)
    throw std::out_of_range("ddpm_coeffs: step outside [0, n_steps]");
  if (step == 0) return {1.0, 0.0, 0.0};
  const double abar = schedule.alpha_bars[static_cast<std::size_t>(step - 1)];
  return {std::sqrt(abar), 0.0, std::sqrt(1.0 - abar)};
}

PathCoefficients rectified_flow_coeffs(double t) {
  if (t < 0.0 || t > 1.0) throw std::out_of_range("rectified_flow_coeffs: t outside [0,1]");
  return {1.0 - t, 0.0, t};
}

// ---------------------------------------------------------------------------

double BridgeParams::theta_bar(double t) const {
  if (t < 0.0 || t > horizon) throw std::out_of_range("BridgeParams: t outside [0, horizon]");
  const double u = t / horizon;
  switch (theta_schedule) {
    case ThetaSchedule::constant:
      return theta_bar_total * u;
    case ThetaSchedule::cosine:
      return theta_bar_total * (u - std::sin(2.0 * std::numbers::pi * u) / (2.0 * std::numbers::pi));
  }
  return 0.0;
}

double BridgeParams::theta(double t) const {
  if (t < 0.0 || t > horizon) throw std::out_of_range("BridgeParams: t outside [0, horizon]");
  const double u = t / horizon;
  switch (theta_schedule) {
    case ThetaSchedule::constant:
      return theta_bar_total / horizon;
    case ThetaSchedule::cosine:
      return theta_bar_total / horizon * (1.0 - std::cos(2.0 * std::numbers::pi * u));
  }
  return 0.0;
}

double BridgeParams::sigma_bar_sq(double s, double t) const {
  const double d = theta_bar(t) - theta_bar(s);
  return lambda * lambda * (1.0 - std::exp(-2.0 * d));
}

PathCoefficients irsde_coeffs(const BridgeParams& params, double t) {
  const double tb = params.theta_bar(t);
  const double decay = std::exp(-tb);
  const double var = params.lambda * params.lambda * (1.0 - std::exp(-2.0 * tb));
  return {decay, 1.0 - decay, std::sqrt(var)};
}

PathCoefficients goub_coeffs(const BridgeParams& params, double t) {
  const double T = params.horizon;
  const double total = params.sigma_bar_sq(0.0, T);
  if (!(total > 0.0)) throw std::invalid_argument("goub_coeffs: degenerate horizon (sigma_bar_sq(0,T) == 0)");
  const double tb = params.theta_bar(t);
  const double decay = std::exp(-tb);
  const double s_t = params.sigma_bar_sq(0.0, t);
  const double s_tT = params.sigma_bar_sq(t, T);
  const double e_tT = std::exp(-2.0 * (params.theta_bar(T) - tb));
  const double ratio = s_tT / total;
  PathCoefficients c;
  c.f = decay * ratio;
  c.b_mul = (1.0 - decay) * ratio + e_tT * s_t / total;
  c.sigma = std::sqrt(s_t * s_tT / total);
  return c;
}

// ---------------------------------------------------------------------------

ResidualSchedule ResidualSchedule::default_linear(int n_steps, bool with_delta) {
  if (n_steps < 1) throw std::invalid_argument("ResidualSchedule: n_steps must be positive");
  ResidualSchedule s;
  s.n_steps = n_steps;
  s.alpha_bars.resize(static_cast<std::size_t>(n_steps) + 1);
  s.beta_bars.resize(static_cast<std::size_t>(n_steps) + 1);
  if (with_delta) s.delta_bars.resize(static_cast<std::size_t>(n_steps) + 1);
  for (int k = 0; k <= n_steps; ++k) {
    const double u = static_cast<double>(k) / n_steps;
    s.alpha_bars[static_cast<std::size_t>(k)] = u;
    s.beta_bars[static_cast<std::size_t>(k)] = 0.25 * u;
    if (with_delta) s.delta_bars[static_cast<std::size_t>(k)] = 0.5 * u;
  }
  return s;
}

namespace {

void check_residual_step(const ResidualSchedule& s, int step, bool need_delta) {
  if (step < 0 || step > s.n_steps)
    throw std::out_of_range("residual coeffs: step outside [0, n_steps]");
  if (s.alpha_bars.size() != static_cast<std::size_t>(s.n_steps) + 1 ||
      s.beta_bars.size() != static_cast<std::size_t>(s.n_steps) + 1)
    throw std::invalid_argument("ResidualSchedule: arrays must have n_steps+1 entries");
  if (need_delta && s.delta_bars.size() != static_cast<std::size_t>(s.n_steps) + 1)
    throw std::invalid_argument("ResidualSchedule: delta_bars required for DiffUIR");
  if (s.beta_bars[static_cast<std::size_t>(step)] < 0.0)
    throw std::invalid_argument("ResidualSchedule: negative beta_bar");
}

}  // namespace

PathCoefficients rddm_coeffs(const ResidualSchedule& schedule, int step) {
  check_residual_step(schedule, step, false);
  const auto k = static_cast<std::size_t>(step);
  return {1.0 - schedule.alpha_bars[k], schedule.alpha_bars[k], std::sqrt(schedule.beta_bars[k])};
}

PathCoefficients diffuir_coeffs(const ResidualSchedule& schedule, int step) {
  check_residual_step(schedule, step, true);
  const auto k = static_cast<std::size_t>(step);
  return {1.0 - schedule.alpha_bars[k], schedule.alpha_bars[k] - schedule.delta_bars[k],
          std::sqrt(schedule.beta_bars[k])};
}

// ---------------------------------------------------------------------------

namespace {

double check_tau(double tau) {
  if (tau < 0.0 || tau > 1.0) throw std::out_of_range("Path: tau outside [0,1]");
  return tau;
}

/// Piecewise-linear interpolation of a per-step array (entry k holds the
/// value of step k+1) with value_at_0 at step 0; keeps monotone schedules
/// monotone in continuous time.
double interp_steps(double tau, int n_steps, const std::vector<double>& per_step,
                    double value_at_0) {
  const double u = tau * n_steps;
  const int k = std::min(static_cast<int>(u), n_steps - 1);
  const double frac = u - k;
  const double left = k == 0 ? value_at_0 : per_step[static_cast<std::size_t>(k - 1)];
  const double right = per_step[static_cast<std::size_t>(k)];
  return left + (right - left) * frac;
}

/// Same, for arrays with one node per step boundary (n_steps + 1 entries).
double interp_nodes(double tau, int n_steps, const std::vector<double>& nodes) {
  const double u = tau * n_steps;
  const int k = std::min(static_cast<int>(u), n_steps - 1);
  const double frac = u - k;
  const double left = nodes[static_cast<std::size_t>(k)];
  const double right = nodes[static_cast<std::size_t>(k + 1)];
  return left + (right - left) * frac;
}

}  // namespace

DdpmPath::DdpmPath(DdpmSchedule schedule, std::string name)
    : schedule_(std::move(schedule)), name_(std::move(name)) {}

PathCoefficients DdpmPath::coeffs(double tau) const {
  check_tau(tau);
  if (tau == 0.0) return {1.0, 0.0, 0.0};
  const double abar = interp_steps(tau, schedule_.n_steps, schedule_.alpha_bars, 1.0);
  return {std::sqrt(abar), 0.0, std::sqrt(1.0 - abar)};
}

PathCoefficients IrSdePath::coeffs(double tau) const {
  return irsde_coeffs(params_, check_tau(tau) * params_.horizon);
}

GoubPath::GoubPath(BridgeParams params) : params_(params) {
  if (!(params_.sigma_bar_sq(0.0, params_.horizon) > 0.0))
    throw std::invalid_argument("GoubPath: degenerate horizon");
}

PathCoefficients GoubPath::coeffs(double tau) const {
  return goub_coeffs(params_, check_tau(tau) * params_.horizon);
}

ResidualPath::ResidualPath(ResidualSchedule schedule, bool diffuir)
    : schedule_(std::move(schedule)), diffuir_(diffuir) {
  check_residual_step(schedule_, 0, diffuir_);
}

PathCoefficients ResidualPath::coeffs(double tau) const {
  check_tau(tau);
  const double abar = interp_nodes(tau, schedule_.n_steps, schedule_.alpha_bars);
  const double bbar = interp_nodes(tau, schedule_.n_steps, schedule_.beta_bars);
  if (!diffuir_) return {1.0 - abar, abar, std::sqrt(bbar)};
  const double dbar = interp_nodes(tau, schedule_.n_steps, schedule_.delta_bars);
  return {1.0 - abar, abar - dbar, std::sqrt(bbar)};
}

}  // namespace irbridge
