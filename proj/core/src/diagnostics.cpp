#include "emsa/diagnostics.hpp"

#include <cmath>

#include "emsa/layers.hpp"

namespace emsa {

const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Ok: return "ok";
    case RunStatus::Diverged: return "diverged";
    case RunStatus::Error: return "error";
  }
  return "?";
}

double total_loss(const NetworkSpec& net, const ParamStack& params, const Batch& batch) {
  const StateTrajectory traj = forward_propagate(net, params, batch);
  const TerminalLoss tl = terminal_loss(net, traj.final_state(), batch);
  double J = tl.per_sample.mean();
  if (net.regularizer_weight != 0.0) {
    for (int n = 0; n < net.depth(); ++n) {
      const LayerSpec& l = net.layers[static_cast<std::size_t>(n)];
      J += l.effective_delta() * regularizer(params[n], net.regularizer_weight).value;
    }
  }
  return J;
}

double accuracy(const NetworkSpec& net, const ParamStack& params, const Batch& batch) {
  if (net.loss_kind != LossKind::SoftmaxCrossEntropy) {
    throw ShapeError("accuracy requires a classification loss");
  }
  const StateTrajectory traj = forward_propagate(net, params, batch);
  const Eigen::MatrixXd& logits = traj.final_state();
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < logits.cols(); ++i) {
    int arg = 0;
    for (int c = 1; c < logits.rows(); ++c) {
      if (logits(c, i) > logits(arg, i)) arg = c;  // strict: lower index wins ties
    }
    if (arg == batch.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.cols());
}

double mu_k(const std::vector<LayerContext>& ctxs, const ParamStack& theta_k,
            const ParamStack& theta_k1) {
  if (theta_k.depth() != static_cast<int>(ctxs.size()) || theta_k1.depth() != theta_k.depth()) {
    throw ShapeError("mu_k: param stack depth mismatch");
  }
  double total = 0.0;
  for (std::size_t n = 0; n < ctxs.size(); ++n) {
    const int i = static_cast<int>(n);
    total += hamiltonian(ctxs[n], theta_k1[i]) - hamiltonian(ctxs[n], theta_k[i]);
  }
  return total;
}

FeasibilityErrors feasibility_errors(const std::vector<LayerContext>& ctxs,
                                     const ParamStack& theta_k, const ParamStack& theta_k1) {
  if (theta_k.depth() != static_cast<int>(ctxs.size()) || theta_k1.depth() != theta_k.depth()) {
    throw ShapeError("feasibility_errors: param stack depth mismatch");
  }
  FeasibilityErrors out;
  for (std::size_t n = 0; n < ctxs.size(); ++n) {
    const LayerContext& ctx = ctxs[n];
    const int i = static_cast<int>(n);
    out.state += (layer_forward(ctx.layer, ctx.x_n, theta_k1[i]) -
                  layer_forward(ctx.layer, ctx.x_n, theta_k[i]))
                     .squaredNorm();
    out.costate += (layer_pullback_x(ctx.layer, ctx.x_n, theta_k1[i], ctx.p_next) -
                    layer_pullback_x(ctx.layer, ctx.x_n, theta_k[i], ctx.p_next))
                       .squaredNorm();
  }
  return out;
}

Lemma1Audit lemma1_audit(const std::vector<IterationReport>& history) {
  if (history.empty()) {
    throw ShapeError("lemma1_audit: empty history");
  }
  Lemma1Audit audit;
  audit.rows.reserve(history.size());
  for (const IterationReport& r : history) {
    if (r.batch_size <= 0) {
      throw ShapeError("lemma1_audit: report lacks batch size");
    }
    const double m = static_cast<double>(r.batch_size);
    // Convert batch-sum quantities to the batch-mean convention of J.
    const double mu_mean = r.mu_k / m;
    const double err_mean = (r.feas_err_state + r.feas_err_costate) / m;
    Lemma1Audit::Row row;
    row.iter = r.iter;
    if (err_mean > 0.0) {
      row.c_min = std::max(0.0, (r.delta_J + mu_mean) / err_mean);
    } else {
      // Vanishing feasibility errors: the estimate demands dJ <= -mu exactly.
      const double tol = 1e-12 * std::max({1.0, std::abs(r.J_batch_before), mu_mean});
      row.flagged = r.delta_J > -mu_mean + tol;
    }
    audit.max_c_min = std::max(audit.max_c_min, row.c_min);
    audit.flags += row.flagged ? 1 : 0;
    audit.rows.push_back(row);
  }
  return audit;
}

CostateBoundCheck costate_norm_audit(const NetworkSpec& net, const ParamStack& params,
                                     const Batch& batch,
                                     const CostateTrajectory* costate_override) {
  for (const LayerSpec& l : net.layers) {
    if (l.kind != LayerKind::ResidualDense) {
      throw ShapeError("costate_norm_audit supports residual dense networks only");
    }
  }
  const StateTrajectory traj = forward_propagate(net, params, batch);
  const CostateTrajectory computed =
      costate_override ? CostateTrajectory{} : backward_propagate(net, params, traj, batch);
  const CostateTrajectory& co = costate_override ? *costate_override : computed;

  const int N = net.depth();
  const Eigen::Index m = batch.size();
  const Eigen::VectorXd grad_phi_norm =
      terminal_loss(net, traj.final_state(), batch).grad.colwise().norm();

  // Cumulative products of (1 + delta_n ||W_n||_2) from layer n to N-1.
  std::vector<double> factor(static_cast<std::size_t>(N));
  for (int n = 0; n < N; ++n) {
    const LayerSpec& l = net.layers[static_cast<std::size_t>(n)];
    const Eigen::Map<const Eigen::MatrixXd> W(params[n].data(), l.out_dim, l.in_dim);
    factor[static_cast<std::size_t>(n)] = 1.0 + l.delta * spectral_norm_estimate(W);
  }

  CostateBoundCheck check;
  check.layer_slack.assign(static_cast<std::size_t>(N) + 1, 1.0);
  double suffix = 1.0;
  for (int n = N; n >= 0; --n) {
    if (n < N) suffix *= factor[static_cast<std::size_t>(n)];
    double worst = 1.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double bound = grad_phi_norm[i] * suffix;
      const double pn = co.costates[static_cast<std::size_t>(n)].col(i).norm();
      if (bound == 0.0) {
        if (pn > 0.0) worst = std::min(worst, -1.0);
        continue;
      }
      worst = std::min(worst, (bound - pn) / bound);
    }
    check.layer_slack[static_cast<std::size_t>(n)] = worst;
    check.worst_slack = std::min(check.worst_slack, worst);
  }
  check.pass = check.worst_slack >= -1e-12;
  return check;
}

GradCheckResult gradient_check(
    const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>& fn,
    const Eigen::VectorXd& point, double h, double tol) {
  Eigen::VectorXd analytic(point.size());
  const double f0 = fn(point, &analytic);
  if (!std::isfinite(f0) || !analytic.allFinite()) {
    throw NumericError("gradient_check: non-finite evaluation at base point");
  }
  GradCheckResult res;
  res.pass = true;
  Eigen::VectorXd x = point;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double fp = fn(x, nullptr);
    x[i] = saved - h;
    const double fm = fn(x, nullptr);
    x[i] = saved;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericError("gradient_check: non-finite evaluation near base point");
    }
    const double numeric = (fp - fm) / (2.0 * h);
    const double rel =
        std::abs(analytic[i] - numeric) /
        std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    if (rel > res.worst_rel_err) {
      res.worst_rel_err = rel;
      res.worst_index = i;
    }
  }
  res.pass = res.worst_rel_err <= tol;
  return res;
}

}  // namespace emsa
