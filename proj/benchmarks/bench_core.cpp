#include <benchmark/benchmark.h>

#include <random>

#include "emsa/lbfgs.hpp"
#include "emsa/presets.hpp"
#include "emsa/propagation.hpp"
#include "emsa/solvers.hpp"

namespace {

using namespace emsa;

Batch sine_batch(Eigen::Index m) {
  const Dataset ds = lift_dataset(sine_dataset(m, 7), 5);
  return ds.full_batch();
}

void BM_ForwardPropagateSine(benchmark::State& state) {
  const NetworkSpec net = sine_network();
  const ParamStack params = init_params(net, InitScheme::TruncatedNormal, 1);
  const Batch batch = sine_batch(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward_propagate(net, params, batch));
  }
}
BENCHMARK(BM_ForwardPropagateSine)->Arg(100)->Arg(1000);

void BM_BackwardPropagateSine(benchmark::State& state) {
  const NetworkSpec net = sine_network();
  const ParamStack params = init_params(net, InitScheme::TruncatedNormal, 1);
  const Batch batch = sine_batch(state.range(0));
  const StateTrajectory traj = forward_propagate(net, params, batch);
  for (auto _ : state) {
    benchmark::DoNotOptimize(backward_propagate(net, params, traj, batch));
  }
}
BENCHMARK(BM_BackwardPropagateSine)->Arg(100)->Arg(1000);

void BM_AugmentedEvalDense(benchmark::State& state) {
  const NetworkSpec net = sine_network();
  const ParamStack params = init_params(net, InitScheme::TruncatedNormal, 1);
  const Batch batch = sine_batch(state.range(0));
  const StateTrajectory traj = forward_propagate(net, params, batch);
  const CostateTrajectory co = backward_propagate(net, params, traj, batch);
  const auto ctxs = make_layer_contexts(net, traj, co, 1.0);
  Eigen::VectorXd grad;
  for (auto _ : state) {
    benchmark::DoNotOptimize(augmented_hamiltonian_eval(ctxs[10], params[10], &grad));
  }
}
BENCHMARK(BM_AugmentedEvalDense)->Arg(100)->Arg(1000);

void BM_MaximizeLayerSine(benchmark::State& state) {
  const NetworkSpec net = sine_network();
  const ParamStack params = init_params(net, InitScheme::TruncatedNormal, 1);
  const Batch batch = sine_batch(1000);
  const StateTrajectory traj = forward_propagate(net, params, batch);
  const CostateTrajectory co = backward_propagate(net, params, traj, batch);
  const auto ctxs = make_layer_contexts(net, traj, co, 1.0);
  const AscentConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(maximize_layer(ctxs[10], params[10], cfg));
  }
}
BENCHMARK(BM_MaximizeLayerSine);

void BM_EmsaIterationSine(benchmark::State& state) {
  const NetworkSpec net = sine_network();
  const ParamStack params = init_params(net, InitScheme::TruncatedNormal, 1);
  const Batch batch = sine_batch(state.range(0));
  SolverConfig cfg;
  cfg.method = Method::Emsa;
  cfg.rho = 1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(emsa_iteration(net, params, batch, cfg));
  }
}
BENCHMARK(BM_EmsaIterationSine)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_ConvForward7x7(benchmark::State& state) {
  const LayerSpec layer = make_residual_conv(32, 7, 7, 0.5);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 0.3);
  Eigen::MatrixXd x(layer.in_dim, state.range(0));
  Eigen::VectorXd theta(layer.param_count());
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) = normal(rng);
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = normal(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(layer_forward(layer, x, theta));
  }
}
BENCHMARK(BM_ConvForward7x7)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
