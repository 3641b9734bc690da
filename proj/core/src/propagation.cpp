#include "emsa/propagation.hpp"

#include <cmath>
#include <random>

namespace emsa {

StateTrajectory forward_propagate(const NetworkSpec& net, const ParamStack& params,
                                  const Batch& batch) {
  params.validate_for(net);
  batch.validate_for(net);
  StateTrajectory traj;
  traj.states.reserve(net.layers.size() + 1);
  traj.states.push_back(batch.inputs);
  for (int n = 0; n < net.depth(); ++n) {
    try {
      traj.states.push_back(
          layer_forward(net.layers[static_cast<std::size_t>(n)], traj.states.back(), params[n]));
    } catch (const NumericError& e) {
      throw NumericError("forward pass failed at layer " + std::to_string(n) + ": " + e.what());
    }
  }
  return traj;
}

CostateTrajectory backward_propagate(const NetworkSpec& net, const ParamStack& params,
                                     const StateTrajectory& traj, const Batch& batch) {
  params.validate_for(net);
  if (traj.depth() != net.depth()) {
    throw ShapeError("trajectory depth != network depth");
  }
  const int N = net.depth();
  CostateTrajectory co;
  co.costates.resize(static_cast<std::size_t>(N) + 1);
  co.costates[static_cast<std::size_t>(N)] = -terminal_loss(net, traj.final_state(), batch).grad;
  for (int n = N - 1; n >= 0; --n) {
    try {
      co.costates[static_cast<std::size_t>(n)] =
          layer_pullback_x(net.layers[static_cast<std::size_t>(n)],
                           traj.states[static_cast<std::size_t>(n)], params[n],
                           co.costates[static_cast<std::size_t>(n) + 1]);
    } catch (const NumericError& e) {
      throw NumericError("backward pass failed at layer " + std::to_string(n) + ": " + e.what());
    }
  }
  return co;
}

double spectral_norm_estimate(const Eigen::MatrixXd& W, int max_iters, double tol) {
  if (W.size() == 0) return 0.0;
  std::mt19937_64 rng(0x5eed5eedULL);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::VectorXd v(W.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = unif(rng);
  double norm = v.norm();
  if (norm == 0.0) return 0.0;
  v /= norm;
  double sigma = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Eigen::VectorXd wv = W * v;
    const double s = wv.norm();
    if (s == 0.0) return 0.0;
    Eigen::VectorXd next = W.transpose() * wv;
    const double nn = next.norm();
    if (nn == 0.0) return s;
    v = next / nn;
    if (std::abs(s - sigma) <= tol * std::max(1.0, s)) {
      sigma = s;
      break;
    }
    sigma = s;
  }
  return (W * v).norm();
}

}  // namespace emsa
