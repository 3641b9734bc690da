#include "emsa/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <vector>

namespace emsa {

void AscentConfig::validate() const {
  if (max_iters <= 0 || memory <= 0 || max_backtracks <= 0) {
    throw ShapeError("ascent iteration/memory limits must be positive");
  }
  if (!(armijo_c > 0.0 && armijo_c < 1.0) ||
      !(backtrack_factor > 0.0 && backtrack_factor < 1.0)) {
    throw ShapeError("armijo_c and backtrack_factor must lie in (0,1)");
  }
  if (grad_tol < 0.0) {
    throw ShapeError("grad_tol must be nonnegative");
  }
}

const char* to_string(AscentStatus s) {
  switch (s) {
    case AscentStatus::Converged: return "converged";
    case AscentStatus::IterLimit: return "iter_limit";
    case AscentStatus::LineSearchStalled: return "line_search_stalled";
  }
  return "?";
}

namespace {
struct CurvaturePair {
  Eigen::VectorXd s, y;  // y is the gradient difference of the minimized -f
  double inv_sy;
};
}  // namespace

// Internally minimizes phi = -f with the standard two-loop recursion.
AscentResult lbfgs_ascend(const AscentObjective& objective, const Eigen::VectorXd& theta0,
                          const AscentConfig& config) {
  config.validate();
  if (!theta0.allFinite()) {
    throw NumericError("lbfgs_ascend: non-finite start point");
  }

  AscentResult res;
  Eigen::VectorXd x = theta0;
  Eigen::VectorXd grad_f(x.size());
  double f = objective(x, &grad_f);
  res.evaluations = 1;
  if (!std::isfinite(f) || !grad_f.allFinite()) {
    throw NumericError("lbfgs_ascend: objective non-finite at start point");
  }
  double phi = -f;
  Eigen::VectorXd g = -grad_f;  // gradient of phi

  std::deque<CurvaturePair> pairs;
  res.status = AscentStatus::IterLimit;

  for (int iter = 0; iter < config.max_iters; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() <= config.grad_tol) {
      res.status = AscentStatus::Converged;
      break;
    }

    // Two-loop recursion: d = -H g.
    Eigen::VectorXd q = g;
    std::vector<double> alpha(pairs.size());
    for (std::size_t i = pairs.size(); i-- > 0;) {
      alpha[i] = pairs[i].inv_sy * pairs[i].s.dot(q);
      q -= alpha[i] * pairs[i].y;
    }
    if (!pairs.empty()) {
      const CurvaturePair& last = pairs.back();
      q *= last.s.dot(last.y) / last.y.squaredNorm();
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const double beta = pairs[i].inv_sy * pairs[i].y.dot(q);
      q += (alpha[i] - beta) * pairs[i].s;
    }
    Eigen::VectorXd d = -q;
    double dir_deriv = g.dot(d);
    if (!(dir_deriv < 0.0) || !d.allFinite()) {
      d = -g;
      dir_deriv = -g.squaredNorm();
    }

    // Unit-length first trial while no curvature information exists.
    double step = pairs.empty() ? 1.0 / std::max(1e-12, d.norm()) : 1.0;
    bool accepted = false;
    Eigen::VectorXd x_trial;
    double phi_trial = 0.0;
    for (int bt = 0; bt < config.max_backtracks; ++bt) {
      x_trial = x + step * d;
      const double f_trial = objective(x_trial, nullptr);
      ++res.evaluations;
      phi_trial = -f_trial;
      if (std::isfinite(phi_trial) &&
          phi_trial <= phi + config.armijo_c * step * dir_deriv) {
        accepted = true;
        break;
      }
      step *= config.backtrack_factor;
    }
    if (!accepted) {
      res.status = AscentStatus::LineSearchStalled;
      break;
    }

    Eigen::VectorXd grad_trial(x.size());
    const double f_trial = objective(x_trial, &grad_trial);
    ++res.evaluations;
    if (!std::isfinite(f_trial) || !grad_trial.allFinite()) {
      // The accepted value was finite; keep the point but stop iterating.
      x = std::move(x_trial);
      phi = phi_trial;
      res.status = AscentStatus::LineSearchStalled;
      break;
    }
    Eigen::VectorXd g_new = -grad_trial;

    CurvaturePair pair;
    pair.s = x_trial - x;
    pair.y = g_new - g;
    const double sy = pair.s.dot(pair.y);
    if (sy > 1e-12 * pair.s.norm() * pair.y.norm()) {
      pair.inv_sy = 1.0 / sy;
      pairs.push_back(std::move(pair));
      if (static_cast<int>(pairs.size()) > config.memory) pairs.pop_front();
    }

    x = std::move(x_trial);
    phi = -f_trial;
    g = std::move(g_new);
    res.iterations = iter + 1;
  }

  res.theta = std::move(x);
  res.value = -phi;
  return res;
}

Eigen::VectorXd maximize_layer(const LayerContext& ctx, const Eigen::VectorXd& theta_k,
                               const AscentConfig& config) {
  if (theta_k.size() != ctx.layer.param_count()) {
    throw ShapeError("maximize_layer: param length mismatch");
  }
  const auto objective = [&ctx](const Eigen::VectorXd& th, Eigen::VectorXd* grad) {
    return augmented_hamiltonian_eval(ctx, th, grad);
  };
  return lbfgs_ascend(objective, theta_k, config).theta;
}

}  // namespace emsa
