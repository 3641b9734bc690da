#include "emsa/solvers.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

#include "emsa/layers.hpp"

namespace emsa {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double regularizer_total(const NetworkSpec& net, const ParamStack& params) {
  if (net.regularizer_weight == 0.0) return 0.0;
  double total = 0.0;
  for (int n = 0; n < net.depth(); ++n) {
    total += net.layers[static_cast<std::size_t>(n)].effective_delta() *
             regularizer(params[n], net.regularizer_weight).value;
  }
  return total;
}

double objective_from_final(const NetworkSpec& net, const ParamStack& params,
                            const Eigen::MatrixXd& x_final, const Batch& batch) {
  return terminal_loss(net, x_final, batch).per_sample.mean() + regularizer_total(net, params);
}

RunStatus classify_objective(double J, const SolverConfig& config) {
  if (!std::isfinite(J) || J > config.divergence_threshold) return RunStatus::Diverged;
  return RunStatus::Ok;
}

/// Runs fn(n) for n in [0, count), possibly on `threads` workers. Results are
/// written into caller-provided slots, so the merge is deterministic.
template <typename Fn>
void parallel_layer_loop(int count, int threads, const Fn& fn) {
  if (threads <= 1 || count <= 1) {
    for (int n = 0; n < count; ++n) fn(n);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (int n = next.fetch_add(1); n < count; n = next.fetch_add(1)) {
      try {
        fn(n);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int n_workers = std::min(threads, count);
  pool.reserve(static_cast<std::size_t>(n_workers));
  for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

/// Shared body of emsa/basic_msa/grad_msa: forward, backward, per-layer
/// update, then the mu_k / feasibility / objective bookkeeping.
IterationResult msa_iteration(const NetworkSpec& net, const ParamStack& params,
                              const Batch& batch, const SolverConfig& config, double rho,
                              bool gradient_step, const char* method_name) {
  IterationResult out;
  out.params = params;
  out.report.method = method_name;
  out.report.batch_size = batch.size();
  const auto t_start = Clock::now();
  try {
    auto t0 = Clock::now();
    const StateTrajectory traj = forward_propagate(net, params, batch);
    out.report.t_forward_s = seconds_since(t0);

    t0 = Clock::now();
    const CostateTrajectory co = backward_propagate(net, params, traj, batch);
    out.report.t_backward_s = seconds_since(t0);

    const std::vector<LayerContext> ctxs = make_layer_contexts(net, traj, co, rho);
    out.report.J_batch_before = objective_from_final(net, params, traj.final_state(), batch);

    t0 = Clock::now();
    ParamStack next = params;
    if (gradient_step) {
      for (int n = 0; n < net.depth(); ++n) {
        next[n] = params[n] +
                  config.eta * grad_theta_hamiltonian(ctxs[static_cast<std::size_t>(n)], params[n]);
      }
    } else {
      parallel_layer_loop(net.depth(), config.threads, [&](int n) {
        next[n] = maximize_layer(ctxs[static_cast<std::size_t>(n)], params[n], config.ascent);
      });
    }
    out.report.t_update_s = seconds_since(t0);

    double mu = 0.0, feas_state = 0.0, feas_costate = 0.0;
    for (int n = 0; n < net.depth(); ++n) {
      const LayerContext& ctx = ctxs[static_cast<std::size_t>(n)];
      mu += hamiltonian(ctx, next[n]) - hamiltonian(ctx, params[n]);
      feas_state += (layer_forward(ctx.layer, ctx.x_n, next[n]) - ctx.x_next).squaredNorm();
      feas_costate +=
          (layer_pullback_x(ctx.layer, ctx.x_n, next[n], ctx.p_next) - ctx.p_curr).squaredNorm();
    }
    out.report.mu_k = mu;
    out.report.feas_err_state = feas_state;
    out.report.feas_err_costate = feas_costate;

    out.report.J_batch_after = total_loss(net, next, batch);
    out.report.delta_J = out.report.J_batch_after - out.report.J_batch_before;
    out.report.status = classify_objective(out.report.J_batch_after, config);
    if (out.report.status != RunStatus::Diverged) {
      out.params = std::move(next);
    }
  } catch (const NumericError&) {
    out.report.status = RunStatus::Diverged;
  } catch (const std::exception&) {
    out.report.status = RunStatus::Error;
  }
  out.report.wall_time_s = seconds_since(t_start);
  return out;
}

}  // namespace

const char* to_string(Method m) {
  switch (m) {
    case Method::Emsa: return "emsa";
    case Method::BasicMsa: return "basic_msa";
    case Method::GradMsa: return "grad_msa";
    case Method::Sgd: return "sgd";
    case Method::Adagrad: return "adagrad";
    case Method::Adam: return "adam";
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  if (s == "emsa") return Method::Emsa;
  if (s == "basic_msa") return Method::BasicMsa;
  if (s == "grad_msa") return Method::GradMsa;
  if (s == "sgd") return Method::Sgd;
  if (s == "adagrad") return Method::Adagrad;
  if (s == "adam") return Method::Adam;
  throw ShapeError("unknown method '" + s + "'");
}

bool is_msa_family(Method m) {
  return m == Method::Emsa || m == Method::BasicMsa || m == Method::GradMsa;
}

void SolverConfig::validate() const {
  if (rho < 0.0) throw ShapeError("rho must be nonnegative");
  if (method == Method::GradMsa || method == Method::Sgd || method == Method::Adagrad ||
      method == Method::Adam) {
    if (!(eta > 0.0)) throw ShapeError("eta must be positive for gradient methods");
  }
  if (iterations < 0) throw ShapeError("iterations must be nonnegative");
  if (batch_size < 0) throw ShapeError("batch_size must be positive or 0 (full batch)");
  if (eval_every < 1) throw ShapeError("eval_every must be >= 1");
  if (threads < 1) throw ShapeError("threads must be >= 1");
  ascent.validate();
}

InitScheme init_scheme_from_string(const std::string& s) {
  if (s == "truncated_normal") return InitScheme::TruncatedNormal;
  if (s == "zeros") return InitScheme::Zeros;
  throw ShapeError("unknown init scheme '" + s + "'");
}

const char* to_string(InitScheme s) {
  return s == InitScheme::TruncatedNormal ? "truncated_normal" : "zeros";
}

ParamStack init_params(const NetworkSpec& net, InitScheme scheme, std::uint64_t seed) {
  ParamStack params = ParamStack::zeros(net);
  if (scheme == InitScheme::Zeros) return params;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.1);
  const auto draw_truncated = [&]() {
    double v;
    do {
      v = normal(rng);
    } while (std::abs(v) > 0.2);  // cut at +-2 standard deviations
    return v;
  };
  for (int n = 0; n < net.depth(); ++n) {
    const LayerSpec& l = net.layers[static_cast<std::size_t>(n)];
    const Eigen::Index weight_count = l.param_count() - (l.is_conv() ? l.conv.out_channels
                                                                      : l.out_dim);
    for (Eigen::Index i = 0; i < weight_count; ++i) params[n][i] = draw_truncated();
    params[n].tail(params[n].size() - weight_count).setConstant(0.1);
  }
  return params;
}

IterationResult emsa_iteration(const NetworkSpec& net, const ParamStack& params,
                               const Batch& batch, const SolverConfig& config) {
  return msa_iteration(net, params, batch, config, config.rho, /*gradient_step=*/false, "emsa");
}

IterationResult basic_msa_iteration(const NetworkSpec& net, const ParamStack& params,
                                    const Batch& batch, const SolverConfig& config) {
  IterationResult out =
      msa_iteration(net, params, batch, config, 0.0, /*gradient_step=*/false, "basic_msa");
  return out;
}

IterationResult grad_msa_iteration(const NetworkSpec& net, const ParamStack& params,
                                   const Batch& batch, const SolverConfig& config) {
  return msa_iteration(net, params, batch, config, 0.0, /*gradient_step=*/true, "grad_msa");
}

BaselineState BaselineState::zeros(const NetworkSpec& net) {
  BaselineState s;
  const ParamStack z = ParamStack::zeros(net);
  s.velocity = z.layer_params;
  s.accum = z.layer_params;
  s.m1 = z.layer_params;
  s.m2 = z.layer_params;
  return s;
}

LossGradients loss_gradient_stack(const NetworkSpec& net, const ParamStack& params,
                                  const Batch& batch) {
  const StateTrajectory traj = forward_propagate(net, params, batch);
  const CostateTrajectory co = backward_propagate(net, params, traj, batch);
  LossGradients out;
  out.J_batch = objective_from_final(net, params, traj.final_state(), batch);
  out.per_layer.resize(static_cast<std::size_t>(net.depth()));
  for (int n = 0; n < net.depth(); ++n) {
    const std::size_t i = static_cast<std::size_t>(n);
    // grad_theta J = delta * grad L - grad_theta (p_{n+1} . g_n)  (batch sum)
    Eigen::VectorXd g =
        -layer_grad_theta(net.layers[i], traj.states[i], params[n], co.costates[i + 1]);
    if (net.regularizer_weight != 0.0) {
      g += net.layers[i].effective_delta() *
           regularizer(params[n], net.regularizer_weight).grad;
    }
    out.per_layer[i] = std::move(g);
  }
  return out;
}

IterationResult baseline_iteration(const NetworkSpec& net, const ParamStack& params,
                                   const Batch& batch, const SolverConfig& config,
                                   BaselineState& state) {
  IterationResult out;
  out.params = params;
  out.report.method = to_string(config.method);
  out.report.batch_size = batch.size();
  const auto t_start = Clock::now();
  try {
    auto t0 = Clock::now();
    const LossGradients lg = loss_gradient_stack(net, params, batch);
    out.report.t_backward_s = seconds_since(t0);
    out.report.J_batch_before = lg.J_batch;

    t0 = Clock::now();
    ParamStack next = params;
    switch (config.method) {
      case Method::Sgd:
        for (int n = 0; n < net.depth(); ++n) {
          const std::size_t i = static_cast<std::size_t>(n);
          if (config.momentum != 0.0) {
            state.velocity[i] = config.momentum * state.velocity[i] + lg.per_layer[i];
            next[n] = params[n] - config.eta * state.velocity[i];
          } else {
            next[n] = params[n] - config.eta * lg.per_layer[i];
          }
        }
        break;
      case Method::Adagrad:
        for (int n = 0; n < net.depth(); ++n) {
          const std::size_t i = static_cast<std::size_t>(n);
          state.accum[i].array() += lg.per_layer[i].array().square();
          next[n].array() =
              params[n].array() - config.eta * lg.per_layer[i].array() /
                                     (state.accum[i].array().sqrt() + config.adagrad_eps);
        }
        break;
      case Method::Adam: {
        state.step += 1;
        const double c1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(state.step));
        const double c2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(state.step));
        for (int n = 0; n < net.depth(); ++n) {
          const std::size_t i = static_cast<std::size_t>(n);
          state.m1[i] = config.adam_beta1 * state.m1[i] + (1.0 - config.adam_beta1) * lg.per_layer[i];
          state.m2[i].array() = config.adam_beta2 * state.m2[i].array() +
                                (1.0 - config.adam_beta2) * lg.per_layer[i].array().square();
          next[n].array() = params[n].array() -
                            config.eta * (state.m1[i].array() / c1) /
                                ((state.m2[i].array() / c2).sqrt() + config.adam_eps);
        }
        break;
      }
      default:
        throw ShapeError("baseline_iteration requires sgd/adagrad/adam");
    }
    out.report.t_update_s = seconds_since(t0);

    out.report.J_batch_after = total_loss(net, next, batch);
    out.report.delta_J = out.report.J_batch_after - out.report.J_batch_before;
    out.report.status = classify_objective(out.report.J_batch_after, config);
    if (out.report.status != RunStatus::Diverged) {
      out.params = std::move(next);
    }
  } catch (const NumericError&) {
    out.report.status = RunStatus::Diverged;
  } catch (const std::exception&) {
    out.report.status = RunStatus::Error;
  }
  out.report.wall_time_s = seconds_since(t_start);
  return out;
}

TrainResult train(const NetworkSpec& net, const ParamStack& init, const Dataset& train_data,
                  const Dataset* test_data, const SolverConfig& config) {
  net.validate();
  config.validate();
  init.validate_for(net);
  if (train_data.size() == 0) {
    throw ShapeError("train: empty dataset");
  }

  TrainResult result;
  result.params = init;
  if (config.iterations == 0) return result;

  const Eigen::Index batch_size =
      config.batch_size == 0 ? train_data.size() : config.batch_size;
  MinibatchSampler sampler(train_data, batch_size, config.seed);
  BaselineState baseline = BaselineState::zeros(net);
  const Batch train_full = train_data.full_batch();
  const Batch test_full = test_data ? test_data->full_batch() : Batch{};
  const bool classification = net.loss_kind == LossKind::SoftmaxCrossEntropy;

  for (int k = 0; k < config.iterations; ++k) {
    const Batch batch = sampler.next();
    IterationResult it;
    switch (config.method) {
      case Method::Emsa: it = emsa_iteration(net, result.params, batch, config); break;
      case Method::BasicMsa: it = basic_msa_iteration(net, result.params, batch, config); break;
      case Method::GradMsa: it = grad_msa_iteration(net, result.params, batch, config); break;
      default: it = baseline_iteration(net, result.params, batch, config, baseline); break;
    }
    it.report.iter = k;
    result.params = std::move(it.params);
    result.status = it.report.status;

    if (it.report.status == RunStatus::Ok &&
        (k % config.eval_every == 0 || k == config.iterations - 1)) {
      it.report.J_train = total_loss(net, result.params, train_full);
      if (classification) {
        it.report.accuracy_train = accuracy(net, result.params, train_full);
      }
      if (test_data) {
        it.report.J_test = total_loss(net, result.params, test_full);
        if (classification) {
          it.report.accuracy_test = accuracy(net, result.params, test_full);
        }
      }
    }
    result.history.push_back(std::move(it.report));
    if (result.status != RunStatus::Ok) break;
  }
  return result;
}

}  // namespace emsa
