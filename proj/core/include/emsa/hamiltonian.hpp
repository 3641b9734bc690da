#pragma once

#include <Eigen/Core>
#include <vector>

#include "emsa/network.hpp"
#include "emsa/propagation.hpp"

// The scaled discrete Hamiltonian H_n(x, p, theta) = p . g_n(x, theta)
// - delta * L(theta), batch-summed over the p . g term, and its augmented
// variant with rho-weighted feasibility penalties.

namespace emsa {

/// Frozen per-layer slice of the trajectories at the current outer iterate.
/// Never mutated by maximization; rho >= 0.
struct LayerContext {
  int n = 0;
  LayerSpec layer;
  double reg_weight = 0.0;
  double rho = 0.0;
  Eigen::MatrixXd x_n;     // states entering layer n
  Eigen::MatrixXd p_next;  // costates p_{n+1}
  Eigen::MatrixXd x_next;  // states x_{n+1} produced by the generating params
  Eigen::MatrixXd p_curr;  // costates p_n
};

/// Freezes one context per layer from full trajectories.
std::vector<LayerContext> make_layer_contexts(const NetworkSpec& net, const StateTrajectory& traj,
                                              const CostateTrajectory& co, double rho);

/// H_n = sum_i p_{n+1,i} . g_n(x_{n,i}, theta) - delta * L(theta).
double hamiltonian(const LayerContext& ctx, const Eigen::VectorXd& theta);

/// H_n minus the two rho-weighted feasibility penalties:
/// 0.5*rho*sum_i ||x_{n+1,i} - g_n(x_{n,i}, theta)||^2 and
/// 0.5*rho*sum_i ||p_{n,i} - grad_x H_n(x_{n,i}, p_{n+1,i}, theta)||^2.
double augmented_hamiltonian(const LayerContext& ctx, const Eigen::VectorXd& theta);

/// Analytic grad_theta H_n.
Eigen::VectorXd grad_theta_hamiltonian(const LayerContext& ctx, const Eigen::VectorXd& theta);

/// Analytic grad_theta of augmented_hamiltonian; the co-state penalty needs
/// the mixed second-derivative product from layer_mixed_grad_theta.
Eigen::VectorXd grad_theta_augmented(const LayerContext& ctx, const Eigen::VectorXd& theta);

/// Fused single-pass evaluation used by the maximizer's inner loop. Values
/// are bit-identical to augmented_hamiltonian (same elementwise expressions);
/// gradients agree with grad_theta_augmented up to summation order. Dense
/// layer kinds share one activation computation; conv kinds fall back to the
/// composed operations.
double augmented_hamiltonian_eval(const LayerContext& ctx, const Eigen::VectorXd& theta,
                                  Eigen::VectorXd* grad);

}  // namespace emsa
