#include "emsa/hamiltonian.hpp"

#include "emsa/layers.hpp"

namespace emsa {

std::vector<LayerContext> make_layer_contexts(const NetworkSpec& net, const StateTrajectory& traj,
                                              const CostateTrajectory& co, double rho) {
  if (rho < 0.0) {
    throw ShapeError("rho must be nonnegative");
  }
  if (traj.depth() != net.depth() ||
      co.costates.size() != static_cast<std::size_t>(net.depth()) + 1) {
    throw ShapeError("trajectory depth mismatch");
  }
  std::vector<LayerContext> ctxs;
  ctxs.reserve(net.layers.size());
  for (int n = 0; n < net.depth(); ++n) {
    const std::size_t i = static_cast<std::size_t>(n);
    ctxs.push_back(LayerContext{n, net.layers[i], net.regularizer_weight, rho, traj.states[i],
                                co.costates[i + 1], traj.states[i + 1], co.costates[i]});
  }
  return ctxs;
}

double hamiltonian(const LayerContext& ctx, const Eigen::VectorXd& theta) {
  const Eigen::MatrixXd g = layer_forward(ctx.layer, ctx.x_n, theta);
  const double pg = ctx.p_next.cwiseProduct(g).sum();
  if (ctx.reg_weight == 0.0) return pg;
  return pg - ctx.layer.effective_delta() * regularizer(theta, ctx.reg_weight).value;
}

double augmented_hamiltonian(const LayerContext& ctx, const Eigen::VectorXd& theta) {
  const Eigen::MatrixXd g = layer_forward(ctx.layer, ctx.x_n, theta);
  double value = ctx.p_next.cwiseProduct(g).sum();
  if (ctx.reg_weight != 0.0) {
    value -= ctx.layer.effective_delta() * regularizer(theta, ctx.reg_weight).value;
  }
  if (ctx.rho == 0.0) return value;
  value -= 0.5 * ctx.rho * (ctx.x_next - g).squaredNorm();
  const Eigen::MatrixXd hx = layer_pullback_x(ctx.layer, ctx.x_n, theta, ctx.p_next);
  value -= 0.5 * ctx.rho * (ctx.p_curr - hx).squaredNorm();
  return value;
}

Eigen::VectorXd grad_theta_hamiltonian(const LayerContext& ctx, const Eigen::VectorXd& theta) {
  Eigen::VectorXd grad = layer_grad_theta(ctx.layer, ctx.x_n, theta, ctx.p_next);
  if (ctx.reg_weight != 0.0) {
    grad -= ctx.layer.effective_delta() * regularizer(theta, ctx.reg_weight).grad;
  }
  return grad;
}

Eigen::VectorXd grad_theta_augmented(const LayerContext& ctx, const Eigen::VectorXd& theta) {
  Eigen::VectorXd grad = grad_theta_hamiltonian(ctx, theta);
  if (ctx.rho == 0.0) return grad;
  // d/dtheta of -0.5*rho*||x_next - g(theta)||^2 = rho * (dg/dtheta)^T r1.
  const Eigen::MatrixXd g = layer_forward(ctx.layer, ctx.x_n, theta);
  const Eigen::MatrixXd r1 = ctx.x_next - g;
  grad += ctx.rho * layer_grad_theta(ctx.layer, ctx.x_n, theta, r1);
  // d/dtheta of -0.5*rho*||p_curr - grad_x H(theta)||^2 needs the mixed term.
  const Eigen::MatrixXd hx = layer_pullback_x(ctx.layer, ctx.x_n, theta, ctx.p_next);
  const Eigen::MatrixXd r2 = ctx.p_curr - hx;
  grad += ctx.rho * layer_mixed_grad_theta(ctx.layer, ctx.x_n, theta, ctx.p_next, r2);
  return grad;
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Fused dense-kind evaluation. The value-producing expressions mirror
// layer_forward / layer_pullback_x exactly so the feasibility penalties are
// bitwise zero at the generating parameters.
double fused_dense_eval(const LayerContext& ctx, const VectorXd& theta, VectorXd* grad) {
  const LayerSpec& l = ctx.layer;
  const bool residual = l.kind == LayerKind::ResidualDense;
  const bool tanh_act = residual && l.activation == Activation::Tanh;
  const double delta = l.effective_delta();
  const Eigen::Map<const MatrixXd> W(theta.data(), l.out_dim, l.in_dim);
  const Eigen::Map<const VectorXd> b(theta.data() + static_cast<Eigen::Index>(l.out_dim) * l.in_dim,
                                     l.out_dim);
  const MatrixXd& x = ctx.x_n;
  const MatrixXd& p = ctx.p_next;

  MatrixXd a = (W * x).colwise() + b;
  if (tanh_act) a = a.array().tanh().matrix();
  const MatrixXd g_map = residual ? (x + l.delta * a).eval() : a;

  double value = p.cwiseProduct(g_map).sum();
  if (ctx.reg_weight != 0.0) {
    value -= delta * ctx.reg_weight * theta.squaredNorm();
  }

  MatrixXd r1, r2, u;
  if (ctx.rho != 0.0 || grad) {
    u = tanh_act ? ((1.0 - a.array().square()) * p.array()).matrix() : p;
  }
  if (ctx.rho != 0.0) {
    r1 = ctx.x_next - g_map;
    value -= 0.5 * ctx.rho * r1.squaredNorm();
    MatrixXd hx = residual ? (p + l.delta * (W.transpose() * u)).eval()
                           : (W.transpose() * p).eval();
    r2 = ctx.p_curr - hx;
    value -= 0.5 * ctx.rho * r2.squaredNorm();
  }
  if (!grad) return value;

  grad->resize(theta.size());
  Eigen::Map<MatrixXd> gW(grad->data(), l.out_dim, l.in_dim);
  Eigen::Map<VectorXd> gb(grad->data() + static_cast<Eigen::Index>(l.out_dim) * l.in_dim,
                          l.out_dim);
  // Left factor hitting x^T: the H term, the state penalty, and the
  // activation-curvature part of the co-state penalty's mixed derivative.
  MatrixXd left = u;
  if (ctx.rho != 0.0) {
    if (tanh_act) {
      left += ctx.rho * ((1.0 - a.array().square()) * r1.array()).matrix();
      // gy2 = (W r2) .* p .* (-2 a (1-a^2))
      const MatrixXd wr2 = W * r2;
      left += ctx.rho * (wr2.array() * p.array() *
                         (-2.0 * a.array() * (1.0 - a.array().square())))
                            .matrix();
    } else {
      left += ctx.rho * r1;
    }
  }
  gW.noalias() = delta * (left * x.transpose());
  gb = delta * left.rowwise().sum();
  if (ctx.rho != 0.0) {
    gW.noalias() += (ctx.rho * delta) * (u * r2.transpose());
  }
  if (ctx.reg_weight != 0.0) {
    *grad -= (delta * 2.0 * ctx.reg_weight) * theta;
  }
  return value;
}

}  // namespace

double augmented_hamiltonian_eval(const LayerContext& ctx, const Eigen::VectorXd& theta,
                                  Eigen::VectorXd* grad) {
  if (theta.size() != ctx.layer.param_count()) {
    throw ShapeError("augmented_hamiltonian_eval: param length mismatch");
  }
  const bool dense_kind =
      ctx.layer.kind == LayerKind::ResidualDense || ctx.layer.kind == LayerKind::Classifier;
  if (dense_kind) {
    return fused_dense_eval(ctx, theta, grad);
  }
  if (grad) *grad = grad_theta_augmented(ctx, theta);
  return augmented_hamiltonian(ctx, theta);
}

}  // namespace emsa
