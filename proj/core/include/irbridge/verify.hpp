#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "irbridge/path.hpp"
#include "irbridge/sde.hpp"
#include "irbridge/transition.hpp"

namespace irbridge {

/// Streaming first/second-moment accumulator; chunks merge in index order so
/// parallel reductions are bit-identical for any worker count.
struct MomentStats {
  std::int64_t n = 0;
  Eigen::VectorXd sum;
  Eigen::VectorXd sum_sq;

  void init(Eigen::Index dim);
  void add(const Eigen::VectorXd& v);
  void merge(const MomentStats& other);
  Eigen::VectorXd mean() const;
  Eigen::VectorXd variance() const;  // unbiased
};

struct MomentTestResult {
  bool pass = false;
  double max_abs_z = 0.0;        // worst per-dimension mean z-score
  double max_var_rel_err = 0.0;  // worst per-dimension relative variance error
};

/// Mean within n_sigma standard errors per dimension (standard error from the
/// expected variance), variance within var_tol relative. Requires >= 1000
/// samples.
MomentTestResult moment_test(const MomentStats& stats, const Eigen::VectorXd& expected_mean,
                             const Eigen::VectorXd& expected_var, double n_sigma,
                             double var_tol = 0.02);

struct CheckLine {
  std::string name;
  bool pass = true;
  bool skipped = false;
  std::string detail;
};

struct Report {
  std::vector<CheckLine> lines;
  bool all_pass() const;
  std::string to_text() const;
};

struct MarginalTestConfig {
  std::vector<std::pair<double, double>> pairs;  // (source time i, destination time j)
  int sigmas_per_pair = 3;                       // lo, midpoints, hi
  std::vector<double> explicit_sigmas;           // overrides the grid when set;
                                                 // out-of-range entries are skipped
  std::int64_t n_samples = 200000;
  double n_sigma = 4.0;
  double var_tol = 0.02;
  Eigen::VectorXd x0;
  Eigen::VectorXd x_lq;
  std::uint64_t seed = 1;
  std::uint32_t stream_tag = 0x7261;
  int threads = 0;
};

/// Reparameterizes source samples at i, pushes them through the transition at
/// each admissible sigma, and moment-tests against the destination marginal.
/// Out-of-range sigmas are reported as skipped with the validity bound.
Report transition_marginal_test(const Path& src_path, const Path& dst_path,
                                const MarginalTestConfig& config);

struct SdeCrosscheckConfig {
  std::vector<double> checkpoints = {0.1, 0.3, 0.5, 0.7, 0.9};  // fractions of T
  std::int64_t n_trajectories = 100000;
  int n_steps = 2000;
  double tolerance = 0.02;  // relative, mean and variance
  double x0 = 1.7;
  double x_lq = 1.0;
  std::uint64_t seed = 1;
  std::uint32_t stream_tag = 0x7364;
  int threads = 0;
  double pin_tolerance = 1e-2;  // pinned-endpoint max |x_T - x_lq|
};

/// Euler-Maruyama empirical moments against the closed-form marginal at each
/// checkpoint; the pinned bridge additionally checks its terminal state.
Report sde_crosscheck(BridgeKind kind, const BridgeParams& params,
                      const SdeCrosscheckConfig& config);

struct CriticalCurvePoint {
  double lambda = 0.0;
  double tau = 0.0;
  CriticalResult result;
};

struct CriticalCurve {
  std::vector<CriticalCurvePoint> points;
  std::string to_csv() const;  // lambda,tau,t_critical,residual,status
};

/// Critical-timestep curves of a bridge family against a generative path,
/// one curve per lambda over a uniform source-time grid.
CriticalCurve critical_curve(BridgeKind kind, const BridgeParams& base_params,
                             const Path& gen_path, const std::vector<double>& lambdas,
                             int grid_points);

}  // namespace irbridge
