#pragma once

#include <Eigen/Core>
#include <vector>

#include "emsa/layers.hpp"
#include "emsa/network.hpp"

// The Hamiltonian dynamics: forward state recursion x_{n+1} = g_n(x_n, theta_n)
// and backward co-state recursion p_n = grad_x H_n(x_n, p_{n+1}, theta_n) with
// p_N = -grad Phi(x_N). Full trajectories are stored; the per-layer
// maximization needs every (x_n, p_{n+1}) pair simultaneously.

namespace emsa {

struct StateTrajectory {
  std::vector<Eigen::MatrixXd> states;  // N+1 entries, states[n] is dim_n x m

  int depth() const { return static_cast<int>(states.size()) - 1; }
  const Eigen::MatrixXd& final_state() const { return states.back(); }
};

struct CostateTrajectory {
  std::vector<Eigen::MatrixXd> costates;  // N+1 entries; index 0 stored but unused
};

/// Runs the state dynamics for the whole batch. Numeric failures carry the
/// offending layer index.
StateTrajectory forward_propagate(const NetworkSpec& net, const ParamStack& params,
                                  const Batch& batch);

/// Runs the co-state dynamics backwards from p_N = -grad Phi(x_N).
CostateTrajectory backward_propagate(const NetworkSpec& net, const ParamStack& params,
                                     const StateTrajectory& traj, const Batch& batch);

/// Largest singular value of W by power iteration on W^T W.
/// Deterministic: fixed-seed start vector.
double spectral_norm_estimate(const Eigen::MatrixXd& W, int max_iters = 50, double tol = 1e-8);

}  // namespace emsa
