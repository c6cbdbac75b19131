#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "irbridge/path.hpp"
#include "irbridge/rng.hpp"

namespace irbridge {

enum class TransitionErrc {
  source_degenerate,  // src.sigma == 0: the reparameterized transition is undefined
  zero_f,             // src.f == 0: the sigma bound divides by f
  sigma_out_of_range,
  below_critical,  // x0-free forward transition requested below the critical time
  above_critical,  // deterministic reverse transition requested above it
};

class TransitionError : public std::runtime_error {
 public:
  TransitionError(TransitionErrc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  TransitionErrc code() const { return code_; }

 private:
  TransitionErrc code_;
};

/// Coefficients of the inter-process transition
///   x_dst = alpha * x_src + beta * x0 + gamma_mul * x_lq + sigma * eps.
/// They satisfy, to roundoff:
///   alpha * f_src + beta      == f_dst
///   alpha * b_src + gamma_mul == b_dst
///   (alpha * sigma_src)^2 + sigma^2 == sigma_dst^2
struct TransitionCoefficients {
  double alpha = 1.0;
  double beta = 0.0;
  double gamma_mul = 0.0;
  double sigma = 0.0;
};

/// Admissible noise interval [lo, hi] for the transition, in standard
/// deviations: hi = sigma_dst, lo^2 = max{0, sigma_dst^2 -
/// (f_dst * sigma_src / f_src)^2}. Never empty.
struct SigmaRange {
  double lo = 0.0;
  double hi = 0.0;
};

SigmaRange sigma_range(const PathCoefficients& src, const PathCoefficients& dst);

/// General transition at a chosen sigma within sigma_range(src, dst).
TransitionCoefficients transition_coeffs(const PathCoefficients& src,
                                         const PathCoefficients& dst, double sigma);

/// sigma_dst * f_src - sigma_src * f_dst. Nonnegative exactly when the
/// x0-free forward transition (beta == 0 at sigma == lo) is admissible, i.e.
/// the destination's noise-to-signal ratio is at least the source's.
double forward_margin(const PathCoefficients& src, const PathCoefficients& dst);

/// Transition at sigma == lo with beta forced to vanish (alpha = f_dst/f_src,
/// so |beta| stays at roundoff rather than amplified cancellation noise).
/// Throws below_critical when the margin is negative.
TransitionCoefficients forward_transition_coeffs(const PathCoefficients& src,
                                                 const PathCoefficients& dst);

/// Deterministic transition at sigma == 0; requires beta >= 0 (destination
/// below the source's critical time). Throws above_critical otherwise.
TransitionCoefficients reverse_transition_coeffs(const PathCoefficients& src,
                                                 const PathCoefficients& dst);

/// alpha * x + gamma_mul * x_lq + lo * eps; the result has exactly the dst
/// marginal law given x0, with no x0 estimate involved.
Eigen::VectorXd forward_transition(const Eigen::VectorXd& x, const PathCoefficients& src,
                                   const PathCoefficients& dst, const Eigen::VectorXd& x_lq,
                                   Rng& rng);

/// alpha * x + beta * x_hat0 + gamma_mul * x_lq; bit-identical on repeat calls.
Eigen::VectorXd reverse_transition(const Eigen::VectorXd& x, const PathCoefficients& src,
                                   const PathCoefficients& dst, const Eigen::VectorXd& x_hat0,
                                   const Eigen::VectorXd& x_lq);

// ---------------------------------------------------------------------------
// Critical timestep: the smallest destination time whose noise-to-signal
// ratio reaches the source's, i.e. the boundary where the forward transition
// first admits beta == 0.

struct CriticalGrid {
  double lo = 0.0;
  double hi = 1.0;
  int points = 1000;
};

struct CriticalResult {
  enum class Status { found, below_grid, above_grid };
  Status status = Status::above_grid;
  double value = 0.0;     // valid when found
  double residual = 0.0;  // |(f_src/f_dst)^2 - (sigma_src/sigma_dst)^2| at value

  bool found() const { return status == Status::found; }
};

/// Grid scan plus bisection on the monotone crossing function; requires the
/// destination's sigma/f ratio to be nondecreasing over the grid.
CriticalResult critical_timestep(const PathCoefficients& src, const Path& dst,
                                 const CriticalGrid& grid = {});

}  // namespace irbridge
