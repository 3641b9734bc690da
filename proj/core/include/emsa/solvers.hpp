#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emsa/data.hpp"
#include "emsa/diagnostics.hpp"
#include "emsa/lbfgs.hpp"

// Outer training loops. E-MSA alternates forward state propagation, backward
// co-state propagation and per-layer augmented-Hamiltonian maximization;
// basic MSA is the rho = 0 special case; gradient-soft MSA replaces the
// argmax with a gradient ascent step on H_n (equivalent to gradient descent
// with back-propagation); SGD/Adagrad/Adam baselines consume the same
// co-state gradients through an independent code path.
//
// Gradients and Hamiltonian sums use the unweighted batch-sum convention, so
// eta and rho are tuned per batch size.

namespace emsa {

enum class Method { Emsa, BasicMsa, GradMsa, Sgd, Adagrad, Adam };

const char* to_string(Method m);
Method method_from_string(const std::string& s);
bool is_msa_family(Method m);

struct SolverConfig {
  Method method = Method::Emsa;
  double rho = 1.0;   // used by emsa only
  double eta = 0.01;  // learning rate for gradient methods only
  AscentConfig ascent;
  Eigen::Index batch_size = 0;  // 0 means full batch
  int iterations = 100;
  std::uint64_t seed = 0;
  int eval_every = 1;
  int threads = 1;
  double momentum = 0.0;  // sgd
  double adagrad_eps = 1e-8;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double divergence_threshold = 1e12;

  void validate() const;
};

enum class InitScheme { TruncatedNormal, Zeros };

InitScheme init_scheme_from_string(const std::string& s);
const char* to_string(InitScheme s);

/// TruncatedNormal: weight entries drawn from N(0, 0.1^2) truncated at +-2
/// standard deviations, biases constant 0.1. Zeros: everything 0.
ParamStack init_params(const NetworkSpec& net, InitScheme scheme, std::uint64_t seed);

struct IterationResult {
  ParamStack params;
  IterationReport report;
};

/// One discrete-time E-MSA step: forward, backward, then an independent
/// warm-started maximization per layer over frozen (x_n, p_{n+1}, x_{n+1},
/// p_n). Any phase error leaves params unchanged with an error status.
IterationResult emsa_iteration(const NetworkSpec& net, const ParamStack& params,
                               const Batch& batch, const SolverConfig& config);

/// E-MSA with rho forced to 0 (same code path). Divergence is expected
/// behavior for deep nonlinear nets, not an error.
IterationResult basic_msa_iteration(const NetworkSpec& net, const ParamStack& params,
                                    const Batch& batch, const SolverConfig& config);

/// Per-layer gradient ascent on H_n: theta' = theta + eta * grad_theta H_n.
IterationResult grad_msa_iteration(const NetworkSpec& net, const ParamStack& params,
                                   const Batch& batch, const SolverConfig& config);

/// Cross-iteration state of the gradient-descent baselines.
struct BaselineState {
  std::vector<Eigen::VectorXd> velocity;  // sgd momentum
  std::vector<Eigen::VectorXd> accum;     // adagrad
  std::vector<Eigen::VectorXd> m1, m2;    // adam moments
  long step = 0;

  static BaselineState zeros(const NetworkSpec& net);
};

/// SGD / Adagrad / Adam step on the batch-sum loss gradient obtained through
/// the co-state pass.
IterationResult baseline_iteration(const NetworkSpec& net, const ParamStack& params,
                                   const Batch& batch, const SolverConfig& config,
                                   BaselineState& state);

struct LossGradients {
  std::vector<Eigen::VectorXd> per_layer;  // grad of batch-sum J w.r.t. theta_n
  double J_batch = 0.0;                    // batch-mean objective at the input params
};

/// Classical back-propagation: forward, backward, then per layer
/// delta * grad L - grad_theta (p . g). Independent of the Hamiltonian-ascent
/// code path used by grad_msa.
LossGradients loss_gradient_stack(const NetworkSpec& net, const ParamStack& params,
                                  const Batch& batch);

struct TrainResult {
  std::vector<IterationReport> history;
  ParamStack params;
  RunStatus status = RunStatus::Ok;
};

/// Runs `iterations` outer steps with mini-batches sampled per epoch
/// (seeded shuffle, contiguous partition). Full train/test evaluations are
/// appended to the report on the eval_every schedule. Deterministic under a
/// fixed seed. Stops early with partial history on divergence.
TrainResult train(const NetworkSpec& net, const ParamStack& init, const Dataset& train_data,
                  const Dataset* test_data, const SolverConfig& config);

}  // namespace emsa
