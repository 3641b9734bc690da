#pragma once

#include <Eigen/Core>
#include <functional>

#include "emsa/hamiltonian.hpp"

// Bounded-iteration L-BFGS ascent used to approximately solve each layer's
// augmented-Hamiltonian maximization. Monotone by construction: any step
// failing the Armijo test after max_backtracks is rejected and the current
// iterate retained.

namespace emsa {

struct AscentConfig {
  int max_iters = 10;
  int memory = 10;
  double armijo_c = 1e-4;
  double backtrack_factor = 0.5;
  int max_backtracks = 30;
  double grad_tol = 1e-10;

  void validate() const;
};

enum class AscentStatus { Converged, IterLimit, LineSearchStalled };

const char* to_string(AscentStatus s);

struct AscentResult {
  Eigen::VectorXd theta;
  double value = 0.0;
  AscentStatus status = AscentStatus::IterLimit;
  int iterations = 0;
  int evaluations = 0;
};

/// Objective oracle: returns the value at theta and, when `grad` is non-null,
/// writes the gradient. Must be deterministic.
using AscentObjective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>;

/// Maximizes the objective from theta0. Guarantees value* >= objective(theta0).
/// Two-loop recursion over at most `memory` curvature pairs; pairs with
/// s.y <= 1e-12*||s||*||y|| are skipped. Throws NumericError if the objective
/// is non-finite at theta0; non-finite trial values shrink the step and count
/// as backtracks.
AscentResult lbfgs_ascend(const AscentObjective& objective, const Eigen::VectorXd& theta0,
                          const AscentConfig& config);

/// Warm-started argmax of the augmented Hamiltonian for one layer:
/// H~(result) >= H~(theta_k) on every call.
Eigen::VectorXd maximize_layer(const LayerContext& ctx, const Eigen::VectorXd& theta_k,
                               const AscentConfig& config);

}  // namespace emsa
