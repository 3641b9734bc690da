#include <doctest.h>

#include <cmath>

#include "emsa/diagnostics.hpp"
#include "emsa/presets.hpp"
#include "emsa/solvers.hpp"
#include "support/oracles.hpp"

using namespace emsa;
using emsa::testing::random_matrix;
using emsa::testing::random_vector;

TEST_CASE("total_loss: perfect fit is zero, uniform logits give ln(10)") {
  NetworkSpec reg_net = sine_network(3, 1.0, 0.5);
  std::mt19937_64 rng(1);
  Batch batch;
  batch.inputs = lift_input(random_matrix(1, 5, rng), 3);
  batch.scalar_targets = batch.inputs.colwise().sum().transpose();
  CHECK(total_loss(reg_net, ParamStack::zeros(reg_net), batch) == 0.0);

  NetworkSpec cls;
  cls.layers = {make_classifier(4, 10)};
  cls.loss_kind = LossKind::SoftmaxCrossEntropy;
  Batch cbatch;
  cbatch.inputs = random_matrix(4, 3, rng);
  cbatch.labels.resize(3);
  cbatch.labels << 0, 5, 9;
  // Zero parameters give uniform logits.
  CHECK(total_loss(cls, ParamStack::zeros(cls), cbatch) ==
        doctest::Approx(std::log(10.0)).epsilon(1e-12));
}

TEST_CASE("total_loss equals the term-by-term oracle with a regularizer") {
  NetworkSpec net = sine_network(4, 1.0, 0.25);
  net.regularizer_weight = 0.3;
  const ParamStack params = init_params(net, InitScheme::TruncatedNormal, 2);
  std::mt19937_64 rng(3);
  Batch batch;
  batch.inputs = lift_input(random_matrix(1, 6, rng), 4);
  batch.scalar_targets = random_vector(6, rng);

  const StateTrajectory traj = forward_propagate(net, params, batch);
  double expected = terminal_loss(net, traj.final_state(), batch).per_sample.mean();
  for (int n = 0; n < net.depth(); ++n) {
    expected += 0.25 * 0.3 * params[n].squaredNorm();
  }
  CHECK(std::abs(total_loss(net, params, batch) - expected) < 1e-12);
}

TEST_CASE("accuracy breaks argmax ties toward the lower class index") {
  NetworkSpec cls;
  cls.layers = {make_classifier(2, 3)};
  cls.loss_kind = LossKind::SoftmaxCrossEntropy;
  // Zero parameters: all logits equal, argmax must be class 0.
  Batch batch;
  batch.inputs = Eigen::MatrixXd::Ones(2, 2);
  batch.labels.resize(2);
  batch.labels << 0, 1;
  CHECK(accuracy(cls, ParamStack::zeros(cls), batch) == doctest::Approx(0.5));
}

TEST_CASE("mu_k is zero at unchanged parameters and additive per layer") {
  const NetworkSpec net = sine_network(3, 0.5, 0.25);  // two layers
  const ParamStack theta_k = init_params(net, InitScheme::TruncatedNormal, 5);
  std::mt19937_64 rng(7);
  Batch batch;
  batch.inputs = lift_input(random_matrix(1, 4, rng), 3);
  batch.scalar_targets = random_vector(4, rng);
  const StateTrajectory traj = forward_propagate(net, theta_k, batch);
  const CostateTrajectory co = backward_propagate(net, theta_k, traj, batch);
  const auto ctxs = make_layer_contexts(net, traj, co, 1.0);

  CHECK(mu_k(ctxs, theta_k, theta_k) == 0.0);

  ParamStack theta_k1 = theta_k;
  theta_k1[0] += random_vector(theta_k[0].size(), rng, 0.1);
  theta_k1[1] += random_vector(theta_k[1].size(), rng, 0.1);
  const double expected = (hamiltonian(ctxs[0], theta_k1[0]) - hamiltonian(ctxs[0], theta_k[0])) +
                          (hamiltonian(ctxs[1], theta_k1[1]) - hamiltonian(ctxs[1], theta_k[1]));
  CHECK(std::abs(mu_k(ctxs, theta_k, theta_k1) - expected) < 1e-12);
}

TEST_CASE("feasibility errors vanish at unchanged parameters and match direct norms") {
  NetworkSpec net;
  net.layers = {make_residual_dense(4, 0.5)};
  net.loss_kind = LossKind::SumSquaredScalarTarget;
  const ParamStack theta_k = init_params(net, InitScheme::TruncatedNormal, 9);
  std::mt19937_64 rng(11);
  Batch batch;
  batch.inputs = random_matrix(4, 3, rng);
  batch.scalar_targets = random_vector(3, rng);
  const StateTrajectory traj = forward_propagate(net, theta_k, batch);
  const CostateTrajectory co = backward_propagate(net, theta_k, traj, batch);
  const auto ctxs = make_layer_contexts(net, traj, co, 0.0);

  const FeasibilityErrors zero = feasibility_errors(ctxs, theta_k, theta_k);
  CHECK(zero.state == 0.0);
  CHECK(zero.costate == 0.0);

  ParamStack theta_k1 = theta_k;
  theta_k1[0] += random_vector(theta_k[0].size(), rng, 0.2);
  const FeasibilityErrors fe = feasibility_errors(ctxs, theta_k, theta_k1);
  const double state_direct =
      (layer_forward(net.layers[0], batch.inputs, theta_k1[0]) -
       layer_forward(net.layers[0], batch.inputs, theta_k[0]))
          .squaredNorm();
  const double costate_direct =
      (layer_pullback_x(net.layers[0], batch.inputs, theta_k1[0], co.costates[1]) -
       layer_pullback_x(net.layers[0], batch.inputs, theta_k[0], co.costates[1]))
          .squaredNorm();
  CHECK(std::abs(fe.state - state_direct) < 1e-12);
  CHECK(std::abs(fe.costate - costate_direct) < 1e-12);
  CHECK(fe.state >= 0.0);
  CHECK(fe.costate >= 0.0);
}

TEST_CASE("lemma1_audit flags only genuine violations") {
  IterationReport good;
  good.iter = 0;
  good.batch_size = 4;
  good.mu_k = 0.8;             // batch sum; mean contribution 0.2
  good.delta_J = -0.2;         // exactly -mu/m
  good.feas_err_state = 0.0;
  good.feas_err_costate = 0.0;

  IterationReport c_zero = good;
  c_zero.iter = 1;
  c_zero.feas_err_state = 0.4;  // dJ = -mu/m with errors > 0 implies C_min = 0
  c_zero.delta_J = -0.2;

  IterationReport violation = good;
  violation.iter = 2;
  violation.delta_J = -0.1;  // worse than -mu/m with zero feasibility errors

  const Lemma1Audit audit = lemma1_audit({good, c_zero, violation});
  CHECK(audit.rows[0].flagged == false);
  CHECK(audit.rows[1].flagged == false);
  CHECK(audit.rows[1].c_min == doctest::Approx(0.0));
  CHECK(audit.rows[2].flagged == true);
  CHECK(audit.flags == 1);

  CHECK_THROWS_AS(lemma1_audit({}), ShapeError);
}

TEST_CASE("lemma1_audit reports a finite max C_min on an emsa run") {
  const NetworkSpec net = sine_network(4, 1.0, 0.25);
  const Dataset data = lift_dataset(sine_dataset(24, 13), 4);
  SolverConfig cfg;
  cfg.method = Method::Emsa;
  cfg.rho = 1.0;
  cfg.iterations = 10;
  const TrainResult tr =
      train(net, init_params(net, InitScheme::TruncatedNormal, 14), data, nullptr, cfg);
  const Lemma1Audit audit = lemma1_audit(tr.history);
  CHECK(audit.flags == 0);
  CHECK(std::isfinite(audit.max_c_min));
}

TEST_CASE("costate_norm_audit: equality for the zero-weight net, failure when corrupted") {
  const NetworkSpec net = sine_network(4, 1.0, 0.25);
  std::mt19937_64 rng(15);
  Batch batch;
  batch.inputs = lift_input(random_matrix(1, 5, rng), 4);
  batch.scalar_targets = random_vector(5, rng);

  const ParamStack zeros = ParamStack::zeros(net);
  const CostateBoundCheck at_zero = costate_norm_audit(net, zeros, batch);
  CHECK(at_zero.pass);
  // Identity backward maps: the bound holds with equality at every layer.
  for (double slack : at_zero.layer_slack) {
    CHECK(std::abs(slack) < 1e-12);
  }

  const ParamStack params = init_params(net, InitScheme::TruncatedNormal, 16);
  CHECK(costate_norm_audit(net, params, batch).pass);

  const StateTrajectory traj = forward_propagate(net, params, batch);
  CostateTrajectory corrupted = backward_propagate(net, params, traj, batch);
  for (auto& p : corrupted.costates) p *= 10.0;
  CHECK_FALSE(costate_norm_audit(net, params, batch, &corrupted).pass);
}

TEST_CASE("gradient_check is exact on linear and quadratic functions") {
  Eigen::VectorXd point(2);
  point << 1.0, 2.0;
  const GradCheckResult lin = gradient_check(
      [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
        if (g) {
          g->resize(2);
          (*g) << 3.0, -2.0;
        }
        return 3.0 * x[0] - 2.0 * x[1] + 1.0;
      },
      point, 1e-5, 1e-10);
  CHECK(lin.pass);
  CHECK(lin.worst_rel_err < 1e-10);

  const GradCheckResult quad = gradient_check(
      [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
        if (g) *g = 2.0 * x;
        return x.squaredNorm();
      },
      point, 1e-5, 1e-8);
  CHECK(quad.pass);

  const GradCheckResult wrong = gradient_check(
      [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
        if (g) *g = 3.0 * x;  // deliberately wrong scale
        return x.squaredNorm();
      },
      point, 1e-5, 1e-6);
  CHECK_FALSE(wrong.pass);
}
