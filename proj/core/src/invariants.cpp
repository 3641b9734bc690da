#include "emsa/invariants.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "emsa/diagnostics.hpp"
#include "emsa/layers.hpp"
#include "emsa/presets.hpp"
#include "emsa/solvers.hpp"

namespace emsa {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                       double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
  return random_matrix(n, 1, rng, scale).col(0);
}

std::vector<LayerSpec> derivative_check_layers() {
  return {
      make_residual_dense(5, 0.25),
      make_residual_dense(4, 0.5, Activation::Identity),
      make_residual_conv(2, 5, 5, 0.5),
      make_projection(1, 3, 6, 6),
      make_classifier(6, 4),
  };
}

/// A frozen context with nonzero feasibility residuals: trajectories come
/// from a different parameter vector than the evaluation point.
LayerContext random_context(const LayerSpec& layer, double rho, double reg_weight,
                            std::mt19937_64& rng, Eigen::Index m = 3) {
  LayerContext ctx;
  ctx.layer = layer;
  ctx.rho = rho;
  ctx.reg_weight = reg_weight;
  ctx.x_n = random_matrix(layer.in_dim, m, rng);
  ctx.p_next = random_matrix(layer.out_dim, m, rng);
  const VectorXd theta_gen = random_vector(layer.param_count(), rng, 0.3);
  ctx.x_next = layer_forward(layer, ctx.x_n, theta_gen);
  ctx.p_curr = layer_pullback_x(layer, ctx.x_n, theta_gen, ctx.p_next);
  return ctx;
}

CheckResult derivative_suite(const InvariantSuiteOptions& options) {
  CheckResult res{"derivative_suite", true, 0.0, ""};
  std::mt19937_64 rng(options.seed ^ 0xd1ffULL);
  const double h = 1e-5, tol = 1e-6;
  std::string worst_what = "-";
  auto track = [&](const GradCheckResult& g, const std::string& what) {
    if (g.worst_rel_err > res.worst_err) {
      res.worst_err = g.worst_rel_err;
      worst_what = what;
    }
    res.pass = res.pass && g.pass;
  };

  for (const LayerSpec& layer : derivative_check_layers()) {
    for (int rep = 0; rep < options.instances_per_kind; ++rep) {
      LayerContext ctx = random_context(layer, 0.7, 0.1, rng);
      const VectorXd theta = random_vector(layer.param_count(), rng, 0.3);
      track(gradient_check(
                [&](const VectorXd& th, VectorXd* g) {
                  if (g) *g = grad_theta_hamiltonian(ctx, th);
                  return hamiltonian(ctx, th);
                },
                theta, h, tol),
            std::string("grad_H/") + to_string(layer.kind));
      track(gradient_check(
                [&](const VectorXd& th, VectorXd* g) {
                  if (g) *g = grad_theta_augmented(ctx, th);
                  return augmented_hamiltonian(ctx, th);
                },
                theta, h, tol),
            std::string("grad_H_aug/") + to_string(layer.kind));
      // Pullback in x: differentiate p . g(x, theta) with respect to x.
      const MatrixXd p = ctx.p_next;
      const VectorXd x0 = ctx.x_n.col(0);
      const MatrixXd p0 = p.col(0);
      track(gradient_check(
                [&](const VectorXd& xv, VectorXd* g) {
                  const MatrixXd xm = xv;
                  if (g) *g = layer_pullback_x(layer, xm, theta, p0).col(0);
                  return p0.cwiseProduct(layer_forward(layer, xm, theta)).sum();
                },
                x0, h, tol),
            std::string("pullback_x/") + to_string(layer.kind));
    }
  }

  // Terminal losses and the regularizer.
  std::vector<NetworkSpec> nets(2);
  nets[0] = sine_network(4, 1.0, 0.5);
  nets[1] = mnist_dense_network(4, 1, 0.5);
  for (const NetworkSpec& net : nets) {
    const int d = net.output_dim();
    Batch batch;
    batch.inputs = random_matrix(net.input_dim(), 1, rng);
    if (net.loss_kind == LossKind::SumSquaredScalarTarget) {
      batch.scalar_targets = random_vector(1, rng);
    } else {
      batch.labels.resize(1);
      batch.labels[0] = 1;
    }
    const VectorXd x0 = random_vector(d, rng);
    track(gradient_check(
              [&](const VectorXd& xv, VectorXd* g) {
                const TerminalLoss tl = terminal_loss(net, xv, batch);
                if (g) *g = tl.grad.col(0);
                return tl.per_sample[0];
              },
              x0, h, tol),
          std::string("terminal_loss/") + to_string(net.loss_kind));
  }
  const VectorXd th = random_vector(6, rng);
  track(gradient_check(
            [&](const VectorXd& t, VectorXd* g) {
              const Regularizer r = regularizer(t, 0.5);
              if (g) *g = r.grad;
              return r.value;
            },
            th, h, 1e-8),
        "regularizer");

  res.detail = "worst: " + worst_what;
  return res;
}

CheckResult prop3_equivalence(const InvariantSuiteOptions& options) {
  CheckResult res{"prop3_grad_msa_equals_sgd", true, 0.0, ""};
  std::mt19937_64 rng(options.seed ^ 0xb9cULL);
  NetworkSpec net = sine_network(4, 1.5, 0.5);
  net.regularizer_weight = 0.05;
  const Dataset data = lift_dataset(sine_dataset(16, options.seed + 3), 4);

  SolverConfig sgd_cfg;
  sgd_cfg.method = Method::Sgd;
  sgd_cfg.eta = 0.01;
  sgd_cfg.iterations = 10;
  SolverConfig gm_cfg = sgd_cfg;
  gm_cfg.method = Method::GradMsa;

  const ParamStack init = init_params(net, InitScheme::TruncatedNormal, options.seed + 9);
  const TrainResult a = train(net, init, data, nullptr, gm_cfg);
  const TrainResult b = train(net, init, data, nullptr, sgd_cfg);
  for (int n = 0; n < net.depth(); ++n) {
    res.worst_err = std::max(
        res.worst_err, (a.params[n] - b.params[n]).lpNorm<Eigen::Infinity>());
  }
  res.pass = res.worst_err < 1e-12;
  res.detail = "max |theta_gm - theta_sgd| over 10 iterations";
  return res;
}

CheckResult mu_k_checks(const InvariantSuiteOptions& options) {
  CheckResult res{"mu_k_nonneg_and_two_path", true, 0.0, ""};
  const NetworkSpec net = sine_network(5, 2.0, 0.25);
  const Dataset data = lift_dataset(sine_dataset(32, options.seed + 17), 5);
  SolverConfig cfg;
  cfg.method = Method::Emsa;
  cfg.rho = 1.0;
  ParamStack params = init_params(net, InitScheme::TruncatedNormal, options.seed + 1);
  const Batch batch = data.full_batch();
  double worst_mu = 0.0, worst_gap = 0.0;
  for (int k = 0; k < 5; ++k) {
    const StateTrajectory traj = forward_propagate(net, params, batch);
    const CostateTrajectory co = backward_propagate(net, params, traj, batch);
    const std::vector<LayerContext> ctxs = make_layer_contexts(net, traj, co, cfg.rho);
    const IterationResult it = emsa_iteration(net, params, batch, cfg);
    const double mu_independent = mu_k(ctxs, params, it.params);
    worst_mu = std::min(worst_mu, it.report.mu_k);
    worst_gap = std::max(worst_gap, std::abs(mu_independent - it.report.mu_k));
    params = it.params;
  }
  res.pass = worst_mu >= -1e-12 && worst_gap <= 1e-12;
  res.worst_err = std::max(-worst_mu, worst_gap);
  res.detail = "min mu_k and |mu_solver - mu_diagnostics| over 5 iterations";
  return res;
}

CheckResult costate_identity(const InvariantSuiteOptions& options) {
  CheckResult res{"costate_identity", true, 0.0, ""};
  std::mt19937_64 rng(options.seed ^ 0xc057a7eULL);
  const NetworkSpec net = sine_network(4, 1.5, 0.25);
  const ParamStack params = init_params(net, InitScheme::TruncatedNormal, options.seed + 5);
  Batch batch;
  batch.inputs = random_matrix(4, 1, rng);
  batch.scalar_targets = random_vector(1, rng);

  const StateTrajectory traj = forward_propagate(net, params, batch);
  const int N = net.depth();

  // Manual backward recursion with the (optionally corrupted) pullback.
  std::vector<MatrixXd> costates(static_cast<std::size_t>(N) + 1);
  costates[static_cast<std::size_t>(N)] = -terminal_loss(net, traj.final_state(), batch).grad;
  const double sign = options.corrupt_pullback_sign ? -1.0 : 1.0;
  for (int n = N - 1; n >= 0; --n) {
    costates[static_cast<std::size_t>(n)] =
        sign * layer_pullback_x(net.layers[static_cast<std::size_t>(n)],
                                traj.states[static_cast<std::size_t>(n)], params[n],
                                costates[static_cast<std::size_t>(n) + 1]);
  }

  // p_n must equal -grad_{x_n} Phi(x_N): re-run the forward pass from a
  // perturbed x_n as the finite-difference oracle.
  const double h = 1e-5;
  for (int n : {0, N / 2, N - 1}) {
    const std::size_t ni = static_cast<std::size_t>(n);
    for (int c = 0; c < net.state_dim(n); ++c) {
      auto phi_from = [&](double bump) {
        MatrixXd x = traj.states[ni];
        x(c, 0) += bump;
        for (int l = n; l < N; ++l) {
          x = layer_forward(net.layers[static_cast<std::size_t>(l)], x, params[l]);
        }
        return terminal_loss(net, x, batch).per_sample[0];
      };
      const double fd = (phi_from(h) - phi_from(-h)) / (2.0 * h);
      const double analytic = -costates[ni](c, 0);
      const double rel =
          std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-8});
      res.worst_err = std::max(res.worst_err, rel);
    }
  }
  res.pass = res.worst_err < 1e-5;
  res.detail = "p_n vs -grad_{x_n} Phi(x_N), finite differences";
  return res;
}

CheckResult gronwall_audit(const InvariantSuiteOptions& options) {
  CheckResult res{"costate_norm_bound", true, 0.0, ""};
  std::mt19937_64 rng(options.seed ^ 0x9607a11ULL);
  const NetworkSpec net = sine_network();
  double worst = 1.0;
  for (int rep = 0; rep < options.instances_per_kind; ++rep) {
    const ParamStack params = init_params(net, InitScheme::TruncatedNormal, options.seed + rep);
    Batch batch;
    batch.inputs = lift_input(random_matrix(1, 8, rng), 5);
    batch.scalar_targets = random_vector(8, rng);
    CostateBoundCheck check;
    if (options.corrupt_costate_scale != 1.0) {
      const StateTrajectory traj = forward_propagate(net, params, batch);
      CostateTrajectory co = backward_propagate(net, params, traj, batch);
      for (auto& p : co.costates) p *= options.corrupt_costate_scale;
      check = costate_norm_audit(net, params, batch, &co);
    } else {
      check = costate_norm_audit(net, params, batch);
    }
    worst = std::min(worst, check.worst_slack);
    res.pass = res.pass && check.pass;
  }
  res.worst_err = -std::min(0.0, worst);
  res.detail = "worst relative slack " + std::to_string(worst);
  return res;
}

CheckResult lemma1_check(const InvariantSuiteOptions& options) {
  CheckResult res{"lemma1_audit", true, 0.0, ""};
  const NetworkSpec net = sine_network(5, 2.0, 0.25);
  const Dataset data = lift_dataset(sine_dataset(32, options.seed + 29), 5);
  SolverConfig cfg;
  cfg.method = Method::Emsa;
  cfg.rho = 1.0;
  cfg.iterations = 10;
  const ParamStack init = init_params(net, InitScheme::TruncatedNormal, options.seed + 2);
  const TrainResult tr = train(net, init, data, nullptr, cfg);
  const Lemma1Audit audit = lemma1_audit(tr.history);
  res.pass = audit.flags == 0;
  res.worst_err = static_cast<double>(audit.flags);
  std::ostringstream os;
  os << "flags " << audit.flags << ", max C_min " << audit.max_c_min;
  res.detail = os.str();
  return res;
}

}  // namespace

std::vector<CheckResult> run_invariant_suite(const InvariantSuiteOptions& options) {
  std::vector<CheckResult> results;
  results.push_back(derivative_suite(options));
  results.push_back(prop3_equivalence(options));
  results.push_back(mu_k_checks(options));
  results.push_back(costate_identity(options));
  results.push_back(gronwall_audit(options));
  results.push_back(lemma1_check(options));
  return results;
}

bool all_passed(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(),
                     [](const CheckResult& r) { return r.pass; });
}

}  // namespace emsa
