#include "irbridge/transition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace irbridge {

namespace {

constexpr double kTiny = 1e-12;

void check_source(const PathCoefficients& src) {
  if (src.sigma == 0.0)
    throw TransitionError(TransitionErrc::source_degenerate,
                          "transition source has sigma == 0 (skip rule applies)");
  if (src.f == 0.0)
    throw TransitionError(TransitionErrc::zero_f, "transition source has f == 0");
}

void check_dims(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw std::invalid_argument("transition: dimension mismatch");
}

}  // namespace

SigmaRange sigma_range(const PathCoefficients& src, const PathCoefficients& dst) {
  check_source(src);
  // (dst.f / src.f) * sigma rather than dst.f * sigma / src.f: equal f's give
  // a ratio of exactly 1, so the same-state range collapses to [0, sigma].
  const double bound = (dst.f / src.f) * src.sigma;
  const double lo_sq = dst.sigma * dst.sigma - bound * bound;
  SigmaRange range;
  range.lo = std::sqrt(std::max(0.0, lo_sq));
  range.hi = dst.sigma;
  return range;
}

TransitionCoefficients transition_coeffs(const PathCoefficients& src,
                                         const PathCoefficients& dst, double sigma) {
  const SigmaRange range = sigma_range(src, dst);
  const double slack = kTiny * std::max(1.0, range.hi);
  if (sigma < range.lo - slack || sigma > range.hi + slack)
    throw TransitionError(TransitionErrc::sigma_out_of_range,
                          "sigma outside the admissible interval");
  const double num = std::max(0.0, dst.sigma * dst.sigma - sigma * sigma);
  TransitionCoefficients c;
  c.alpha = std::sqrt(num) / src.sigma;
  c.beta = dst.f - c.alpha * src.f;
  c.gamma_mul = dst.b_mul - c.alpha * src.b_mul;
  c.sigma = sigma;
  return c;
}

double forward_margin(const PathCoefficients& src, const PathCoefficients& dst) {
  return dst.sigma * src.f - src.sigma * dst.f;
}

TransitionCoefficients forward_transition_coeffs(const PathCoefficients& src,
                                                 const PathCoefficients& dst) {
  check_source(src);
  const double margin = forward_margin(src, dst);
  if (margin < -kTiny * std::max(1.0, dst.sigma * src.f))
    throw TransitionError(TransitionErrc::below_critical,
                          "destination time below the source's critical timestep");
  TransitionCoefficients c;
  c.alpha = dst.f / src.f;
  c.beta = dst.f - c.alpha * src.f;
  c.gamma_mul = dst.b_mul - c.alpha * src.b_mul;
  c.sigma = sigma_range(src, dst).lo;
  return c;
}

TransitionCoefficients reverse_transition_coeffs(const PathCoefficients& src,
                                                 const PathCoefficients& dst) {
  if (src.sigma == 0.0)
    throw TransitionError(TransitionErrc::source_degenerate,
                          "reverse transition source has sigma == 0");
  TransitionCoefficients c;
  c.alpha = dst.sigma / src.sigma;
  c.beta = dst.f - c.alpha * src.f;
  c.gamma_mul = dst.b_mul - c.alpha * src.b_mul;
  c.sigma = 0.0;
  if (c.beta < -kTiny * std::max(1.0, dst.f))
    throw TransitionError(TransitionErrc::above_critical,
                          "target time above the critical timestep (beta < 0 at sigma = 0)");
  return c;
}

Eigen::VectorXd forward_transition(const Eigen::VectorXd& x, const PathCoefficients& src,
                                   const PathCoefficients& dst, const Eigen::VectorXd& x_lq,
                                   Rng& rng) {
  check_dims(x, x_lq);
  const TransitionCoefficients c = forward_transition_coeffs(src, dst);
  Eigen::VectorXd out = c.alpha * x + c.gamma_mul * x_lq;
  if (c.sigma > 0.0) {
    for (Eigen::Index d = 0; d < out.size(); ++d) out[d] += c.sigma * rng.gaussian();
  }
  return out;
}

Eigen::VectorXd reverse_transition(const Eigen::VectorXd& x, const PathCoefficients& src,
                                   const PathCoefficients& dst, const Eigen::VectorXd& x_hat0,
                                   const Eigen::VectorXd& x_lq) {
  check_dims(x, x_lq);
  check_dims(x, x_hat0);
  const TransitionCoefficients c = reverse_transition_coeffs(src, dst);
  return c.alpha * x + c.beta * x_hat0 + c.gamma_mul * x_lq;
}

// ---------------------------------------------------------------------------

namespace {

/// Signed crossing function: F(j) = (f_src/f_dst)^2 - (sigma_src/sigma_dst)^2.
/// Negative below the critical timestep, nonnegative at and above it; strictly
/// increasing when the destination's noise-to-signal ratio is increasing.
double crossing(const PathCoefficients& src, const Path& dst, double tau) {
  const PathCoefficients d = dst.coeffs(tau);
  if (d.sigma == 0.0) return -std::numeric_limits<double>::infinity();
  if (d.f == 0.0) return std::numeric_limits<double>::infinity();
  const double rf = src.f / d.f;
  const double rs = src.sigma / d.sigma;
  return rf * rf - rs * rs;
}

}  // namespace

CriticalResult critical_timestep(const PathCoefficients& src, const Path& dst,
                                 const CriticalGrid& grid) {
  if (grid.points < 2 || !(grid.hi > grid.lo))
    throw std::invalid_argument("critical_timestep: bad grid");
  CriticalResult result;
  if (src.sigma == 0.0) {
    // Noise-free source: every destination time is admissible.
    result.status = CriticalResult::Status::found;
    result.value = grid.lo;
    result.residual = 0.0;
    return result;
  }
  if (src.f == 0.0) {
    result.status = CriticalResult::Status::above_grid;
    return result;
  }
  auto f = [&](double tau) { return crossing(src, dst, tau); };
  const double step = (grid.hi - grid.lo) / grid.points;
  double prev_tau = grid.lo;
  double prev_val = f(prev_tau);
  if (prev_val >= 0.0 && grid.lo > 0.0) {
    result.status = CriticalResult::Status::below_grid;
    return result;
  }
  int first = -1;
  double lo_tau = prev_tau;
  for (int k = 1; k <= grid.points; ++k) {
    const double tau = grid.lo + step * k;
    const double val = f(tau);
    if (prev_val < 0.0 && val >= 0.0) {
      first = k;
      lo_tau = prev_tau;
      break;
    }
    prev_tau = tau;
    prev_val = val;
  }
  if (first < 0) {
    result.status = CriticalResult::Status::above_grid;
    return result;
  }
  double a = lo_tau;
  double b = grid.lo + step * first;
  for (int it = 0; it < 200 && (b - a) > 1e-15 * std::max(1.0, b); ++it) {
    const double mid = 0.5 * (a + b);
    if (f(mid) >= 0.0)
      b = mid;
    else
      a = mid;
  }
  const PathCoefficients d = dst.coeffs(b);
  result.status = CriticalResult::Status::found;
  result.value = b;
  result.residual = (d.sigma == 0.0 || d.f == 0.0)
                        ? 0.0
                        : std::abs((src.f / d.f) * (src.f / d.f) -
                                   (src.sigma / d.sigma) * (src.sigma / d.sigma));
  return result;
}

}  // namespace irbridge
