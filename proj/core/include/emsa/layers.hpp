#pragma once

#include <Eigen/Core>

#include "emsa/network.hpp"

// Layer transition maps g_n and their analytic first derivatives. Everything
// downstream (propagation, Hamiltonians, solvers) consumes this interface.
// All maps are pure functions of their inputs; batches hold one sample per
// column and all numerics are 64-bit.

namespace emsa {

/// Applies g_n to a state batch (in_dim x m) -> (out_dim x m).
/// ResidualDense: x + delta*act(W x + b). ResidualConv2d: the conv analogue.
/// Projection: maxpool2x2(act(conv(x) + b)). Classifier: W x + b.
Eigen::MatrixXd layer_forward(const LayerSpec& spec, const Eigen::MatrixXd& x,
                              const Eigen::VectorXd& theta);

/// Exact vector-Jacobian product: column i is grad_x of p_i . g_n(x_i, theta).
/// For ResidualDense this is p + delta * W^T (sech^2(Wx+b) .* p).
Eigen::MatrixXd layer_pullback_x(const LayerSpec& spec, const Eigen::MatrixXd& x,
                                 const Eigen::VectorXd& theta, const Eigen::MatrixXd& p);

/// grad_theta of sum_i p_i . g_n(x_i, theta), batch contributions summed.
Eigen::VectorXd layer_grad_theta(const LayerSpec& spec, const Eigen::MatrixXd& x,
                                 const Eigen::VectorXd& theta, const Eigen::MatrixXd& p);

/// Mixed second-derivative product: grad_theta of
/// sum_i r_i . grad_x(p_i . g_n(x_i, theta)).
/// Needed by the augmented-Hamiltonian gradient's co-state penalty term.
/// Closed form for dense layers; composed exact forward/reverse conv products
/// for conv kinds (pool selections treated as locally constant).
Eigen::VectorXd layer_mixed_grad_theta(const LayerSpec& spec, const Eigen::MatrixXd& x,
                                       const Eigen::VectorXd& theta, const Eigen::MatrixXd& p,
                                       const Eigen::MatrixXd& r);

struct TerminalLoss {
  Eigen::VectorXd per_sample;  // Phi per sample, always >= 0
  Eigen::MatrixXd grad;        // grad Phi per sample, out_dim x m
};

/// Terminal loss and its analytic gradient.
/// SumSquaredScalarTarget: (sum_j x_j - y)^2, grad 2(sum_j x_j - y) * ones.
/// SoftmaxCrossEntropy: logsumexp(x) - x_label, grad softmax(x) - onehot.
TerminalLoss terminal_loss(const NetworkSpec& net, const Eigen::MatrixXd& x_final,
                           const Batch& batch);

struct Regularizer {
  double value = 0.0;
  Eigen::VectorXd grad;
};

/// L(theta) = weight * ||theta||^2 with gradient 2*weight*theta.
Regularizer regularizer(const Eigen::VectorXd& theta, double weight);

}  // namespace emsa
