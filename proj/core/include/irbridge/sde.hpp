#pragma once

#include <vector>

#include <Eigen/Core>

#include "irbridge/path.hpp"
#include "irbridge/rng.hpp"

namespace irbridge {

enum class BridgeKind { irsde, goub };

/// Precomputed per-step Euler-Maruyama tables over [0, T] with n uniform
/// steps: drift_h[k] = a(t_k) * h and g_sqrt_h[k] = g(t_k) * sqrt(h), where
/// the drift is a(t) * (x_lq - x).
///
/// For the pinned bridge the drift blows up like 1/(T - t); every evaluation
/// here is at t_k <= T - h and stays finite, and the final step uses the
/// exact conditional of the pinned process (the terminal state is x_lq
/// almost surely), so pin_final replaces the last EM update.
struct EmTables {
  int n_steps = 0;
  Eigen::VectorXd drift_h;
  Eigen::VectorXd g_sqrt_h;
  bool pin_final = false;
};

EmTables make_em_tables(BridgeKind kind, const BridgeParams& params, int n_steps);

/// Terminal state of one forward trajectory. Cross-validates the closed-form
/// marginals; inference never uses this.
Eigen::VectorXd em_simulate(BridgeKind kind, const BridgeParams& params,
                            const Eigen::VectorXd& x0, const Eigen::VectorXd& x_lq,
                            int n_steps, Rng& rng);

/// One trajectory with states recorded at the given step indices (each in
/// [0, n_steps], ascending). Row r of the result is the state after
/// record_steps[r] steps.
Eigen::MatrixXd em_simulate_record(BridgeKind kind, const BridgeParams& params,
                                   const Eigen::VectorXd& x0, const Eigen::VectorXd& x_lq,
                                   int n_steps, Rng& rng, const std::vector<int>& record_steps);

/// Same, with tables precomputed once (the fast path for Monte Carlo sweeps).
Eigen::MatrixXd em_simulate_record(const EmTables& tables, const Eigen::VectorXd& x0,
                                   const Eigen::VectorXd& x_lq, Rng& rng,
                                   const std::vector<int>& record_steps);

}  // namespace irbridge
