#include <doctest.h>

#include <cmath>

#include "emsa/diagnostics.hpp"
#include "emsa/hamiltonian.hpp"
#include "emsa/layers.hpp"
#include "emsa/presets.hpp"
#include "emsa/solvers.hpp"
#include "support/oracles.hpp"

using namespace emsa;
using emsa::testing::random_matrix;
using emsa::testing::random_vector;

namespace {

LayerContext make_ctx(const LayerSpec& layer, double rho, double reg_weight,
                      const Eigen::VectorXd& theta_gen, std::mt19937_64& rng, Eigen::Index m = 2) {
  LayerContext ctx;
  ctx.layer = layer;
  ctx.rho = rho;
  ctx.reg_weight = reg_weight;
  ctx.x_n = random_matrix(layer.in_dim, m, rng);
  ctx.p_next = random_matrix(layer.out_dim, m, rng);
  ctx.x_next = layer_forward(layer, ctx.x_n, theta_gen);
  ctx.p_curr = layer_pullback_x(layer, ctx.x_n, theta_gen, ctx.p_next);
  return ctx;
}

// Straight-line per-sample oracle for the dense tanh residual Hamiltonian and
// its augmented penalties.
double augmented_oracle(const LayerContext& ctx, const Eigen::VectorXd& theta) {
  const int d = ctx.layer.in_dim;
  const double delta = ctx.layer.delta;
  double H = 0.0, pen1 = 0.0, pen2 = 0.0;
  for (Eigen::Index s = 0; s < ctx.x_n.cols(); ++s) {
    for (int i = 0; i < d; ++i) {
      double z = theta[d * d + i];
      for (int j = 0; j < d; ++j) z += theta[j * d + i] * ctx.x_n(j, s);
      const double gi = ctx.x_n(i, s) + delta * std::tanh(z);
      H += ctx.p_next(i, s) * gi;
      pen1 += (ctx.x_next(i, s) - gi) * (ctx.x_next(i, s) - gi);
    }
    for (int j = 0; j < d; ++j) {
      double acc = ctx.p_next(j, s);
      for (int i = 0; i < d; ++i) {
        double z = theta[d * d + i];
        for (int k = 0; k < d; ++k) z += theta[k * d + i] * ctx.x_n(k, s);
        const double t = std::tanh(z);
        acc += delta * theta[j * d + i] * (1.0 - t * t) * ctx.p_next(i, s);
      }
      const double diff = ctx.p_curr(j, s) - acc;
      pen2 += diff * diff;
    }
  }
  double reg = 0.0;
  for (Eigen::Index k = 0; k < theta.size(); ++k) reg += theta[k] * theta[k];
  return H - delta * ctx.reg_weight * reg - 0.5 * ctx.rho * (pen1 + pen2);
}

}  // namespace

TEST_CASE("hamiltonian is zero for zero costates and no regularizer") {
  std::mt19937_64 rng(2);
  const LayerSpec layer = make_residual_dense(4, 0.5);
  LayerContext ctx = make_ctx(layer, 0.0, 0.0, random_vector(layer.param_count(), rng), rng);
  ctx.p_next.setZero();
  CHECK(hamiltonian(ctx, random_vector(layer.param_count(), rng)) == 0.0);
}

TEST_CASE("hamiltonian of an identity-activation layer matches the affine closed form") {
  std::mt19937_64 rng(3);
  const LayerSpec layer = make_residual_dense(3, 0.5, Activation::Identity);
  const Eigen::VectorXd theta = random_vector(layer.param_count(), rng);
  LayerContext ctx = make_ctx(layer, 0.0, 0.0, theta, rng, 1);
  const Eigen::Map<const Eigen::MatrixXd> W(theta.data(), 3, 3);
  const Eigen::Map<const Eigen::VectorXd> b(theta.data() + 9, 3);
  const double expected =
      ctx.p_next.col(0).dot(ctx.x_n.col(0) + 0.5 * (W * ctx.x_n.col(0) + b));
  CHECK(hamiltonian(ctx, theta) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("hamiltonian term is additive over the batch") {
  std::mt19937_64 rng(5);
  const LayerSpec layer = make_residual_dense(4, 0.25);
  const Eigen::VectorXd gen = random_vector(layer.param_count(), rng);
  LayerContext both = make_ctx(layer, 0.0, 0.3, gen, rng, 2);
  LayerContext one = both, two = both;
  one.x_n = both.x_n.col(0);
  one.p_next = both.p_next.col(0);
  one.x_next = both.x_next.col(0);
  one.p_curr = both.p_curr.col(0);
  two.x_n = both.x_n.col(1);
  two.p_next = both.p_next.col(1);
  two.x_next = both.x_next.col(1);
  two.p_curr = both.p_curr.col(1);
  const Eigen::VectorXd theta = random_vector(layer.param_count(), rng);
  // The delta*L term appears once per evaluation, so add it back.
  const double delta_L =
      layer.delta * regularizer(theta, both.reg_weight).value;
  CHECK(hamiltonian(both, theta) ==
        doctest::Approx(hamiltonian(one, theta) + hamiltonian(two, theta) + delta_L)
            .epsilon(1e-12));
}

TEST_CASE("H is affine in the costate") {
  std::mt19937_64 rng(7);
  const LayerSpec layer = make_residual_dense(5, 0.25);
  const Eigen::VectorXd gen = random_vector(layer.param_count(), rng);
  LayerContext ctx = make_ctx(layer, 0.0, 0.4, gen, rng, 3);
  const Eigen::VectorXd theta = random_vector(layer.param_count(), rng);
  const Eigen::MatrixXd p1 = random_matrix(5, 3, rng);
  const Eigen::MatrixXd p2 = random_matrix(5, 3, rng);
  const double dL = layer.delta * regularizer(theta, ctx.reg_weight).value;
  LayerContext c1 = ctx, c2 = ctx, c12 = ctx;
  c1.p_next = p1;
  c2.p_next = p2;
  c12.p_next = p1 + p2;
  CHECK(hamiltonian(c12, theta) + dL ==
        doctest::Approx(hamiltonian(c1, theta) + hamiltonian(c2, theta) + 2 * dL)
            .epsilon(1e-12));
}

TEST_CASE("augmented Hamiltonian equals H at the generating parameters") {
  std::mt19937_64 rng(11);
  for (const LayerSpec& layer :
       {make_residual_dense(4, 0.5), make_residual_conv(2, 4, 4, 0.5), make_classifier(5, 3)}) {
    CAPTURE(to_string(layer.kind));
    const Eigen::VectorXd gen = random_vector(layer.param_count(), rng, 0.3);
    const LayerContext ctx = make_ctx(layer, 2.5, 0.0, gen, rng);
    CHECK(augmented_hamiltonian(ctx, gen) == hamiltonian(ctx, gen));  // penalties exactly 0
  }
}

TEST_CASE("augmented Hamiltonian never exceeds H") {
  std::mt19937_64 rng(13);
  const LayerSpec layer = make_residual_dense(4, 0.5);
  const Eigen::VectorXd gen = random_vector(layer.param_count(), rng);
  const LayerContext ctx = make_ctx(layer, 1.7, 0.2, gen, rng);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::VectorXd theta = random_vector(layer.param_count(), rng);
    CHECK(augmented_hamiltonian(ctx, theta) <= hamiltonian(ctx, theta));
  }
}

TEST_CASE("augmented Hamiltonian matches the straight-line oracle") {
  std::mt19937_64 rng(17);
  const LayerSpec layer = make_residual_dense(4, 0.25);
  const Eigen::VectorXd gen = random_vector(layer.param_count(), rng, 0.4);
  LayerContext ctx = make_ctx(layer, 1.3, 0.2, gen, rng, 3);
  for (int rep = 0; rep < 5; ++rep) {
    const Eigen::VectorXd theta = gen + random_vector(layer.param_count(), rng, 0.2);
    const double got = augmented_hamiltonian(ctx, theta);
    const double want = augmented_oracle(ctx, theta);
    CHECK(std::abs(got - want) <= 1e-10 * std::max(1.0, std::abs(want)));
  }
}

TEST_CASE("grad_theta_hamiltonian: zero costate and zero weight gives zero") {
  std::mt19937_64 rng(19);
  const LayerSpec layer = make_residual_dense(4, 0.5);
  LayerContext ctx = make_ctx(layer, 0.0, 0.0, random_vector(layer.param_count(), rng), rng);
  ctx.p_next.setZero();
  CHECK(grad_theta_hamiltonian(ctx, random_vector(layer.param_count(), rng)).norm() == 0.0);
}

TEST_CASE("Hamiltonian gradients pass finite-difference checks on every kind") {
  std::mt19937_64 rng(23);
  for (const LayerSpec& layer :
       {make_residual_dense(5, 0.25), make_residual_dense(3, 0.5, Activation::Identity),
        make_residual_conv(2, 4, 4, 0.5), make_projection(1, 2, 6, 6), make_classifier(6, 3)}) {
    CAPTURE(to_string(layer.kind));
    const Eigen::VectorXd gen = random_vector(layer.param_count(), rng, 0.3);
    const LayerContext ctx = make_ctx(layer, 0.9, 0.15, gen, rng);
    const Eigen::VectorXd theta = random_vector(layer.param_count(), rng, 0.3);
    const GradCheckResult plain = gradient_check(
        [&](const Eigen::VectorXd& th, Eigen::VectorXd* g) {
          if (g) *g = grad_theta_hamiltonian(ctx, th);
          return hamiltonian(ctx, th);
        },
        theta, 1e-5, 1e-6);
    CHECK_MESSAGE(plain.pass, "H gradient worst rel err ", plain.worst_rel_err);
    const GradCheckResult aug = gradient_check(
        [&](const Eigen::VectorXd& th, Eigen::VectorXd* g) {
          if (g) *g = grad_theta_augmented(ctx, th);
          return augmented_hamiltonian(ctx, th);
        },
        theta, 1e-5, 1e-6);
    CHECK_MESSAGE(aug.pass, "H~ gradient worst rel err ", aug.worst_rel_err);
  }
}

TEST_CASE("augmented gradient reduces to the plain gradient when residuals vanish or rho=0") {
  std::mt19937_64 rng(29);
  const LayerSpec layer = make_residual_dense(4, 0.5);
  const Eigen::VectorXd gen = random_vector(layer.param_count(), rng, 0.4);
  LayerContext ctx = make_ctx(layer, 3.0, 0.1, gen, rng);
  // At the generating params both penalty residuals are exactly zero.
  CHECK((grad_theta_augmented(ctx, gen) - grad_theta_hamiltonian(ctx, gen))
            .lpNorm<Eigen::Infinity>() == 0.0);
  // With rho = 0 the penalties are off for any theta.
  ctx.rho = 0.0;
  const Eigen::VectorXd theta = random_vector(layer.param_count(), rng);
  CHECK((grad_theta_augmented(ctx, theta) - grad_theta_hamiltonian(ctx, theta))
            .lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("fused evaluation matches the composed operations") {
  std::mt19937_64 rng(37);
  for (const LayerSpec& layer :
       {make_residual_dense(5, 0.25), make_residual_dense(3, 0.5, Activation::Identity),
        make_residual_conv(2, 4, 4, 0.5), make_classifier(6, 3)}) {
    CAPTURE(to_string(layer.kind));
    const Eigen::VectorXd gen = random_vector(layer.param_count(), rng, 0.3);
    const LayerContext ctx = make_ctx(layer, 1.4, 0.2, gen, rng, 3);
    // Value agreement must be exact: the maximizer's warm-start guarantee
    // rests on the penalties vanishing bitwise at the generating parameters.
    Eigen::VectorXd fused_grad;
    CHECK(augmented_hamiltonian_eval(ctx, gen, &fused_grad) == hamiltonian(ctx, gen));
    for (int rep = 0; rep < 3; ++rep) {
      const Eigen::VectorXd theta = random_vector(layer.param_count(), rng, 0.3);
      Eigen::VectorXd g1;
      const double v1 = augmented_hamiltonian_eval(ctx, theta, &g1);
      CHECK(v1 == augmented_hamiltonian(ctx, theta));
      const Eigen::VectorXd g2 = grad_theta_augmented(ctx, theta);
      CHECK(emsa::testing::max_rel_err(g1, g2) < 1e-12);
    }
  }
}

TEST_CASE("grad_theta_hamiltonian equals -grad_theta J at the generating parameters") {
  // Proposition-3 identity at the level of a single network.
  const NetworkSpec net = sine_network(4, 1.0, 0.25);
  const ParamStack params = init_params(net, InitScheme::TruncatedNormal, 31);
  std::mt19937_64 rng(31);
  Batch batch;
  batch.inputs = lift_input(random_matrix(1, 4, rng), 4);
  batch.scalar_targets = random_vector(4, rng);

  const StateTrajectory traj = forward_propagate(net, params, batch);
  const CostateTrajectory co = backward_propagate(net, params, traj, batch);
  const auto ctxs = make_layer_contexts(net, traj, co, 0.0);

  // Finite-difference J in the batch-sum convention used by H.
  for (int n : {0, 2}) {
    ParamStack mutated = params;
    const auto J_sum = [&](const Eigen::VectorXd& th) {
      mutated[n] = th;
      const StateTrajectory t = forward_propagate(net, mutated, batch);
      return terminal_loss(net, t.final_state(), batch).per_sample.sum();
    };
    const Eigen::VectorXd fd = emsa::testing::fd_gradient(J_sum, params[n]);
    const Eigen::VectorXd hg = grad_theta_hamiltonian(ctxs[static_cast<std::size_t>(n)], params[n]);
    CHECK(emsa::testing::max_rel_err(-fd, hg) < 1e-5);
  }
}
