#pragma once

#include <Eigen/Core>
#include <functional>
#include <random>

#include "emsa/network.hpp"

// Test-only oracles, kept independent of the implementation paths they
// audit: plain scalar-loop reimplementations and central finite differences.

namespace emsa::testing {

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                                     double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

inline Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
  return random_matrix(n, 1, rng, scale).col(0);
}

/// Straight-line scalar-loop evaluation of x + delta * tanh(W x + b) for one
/// sample; W is column-major with shape (d, d), b follows.
inline Eigen::VectorXd dense_residual_oracle(const Eigen::VectorXd& x,
                                             const Eigen::VectorXd& theta, double delta) {
  const Eigen::Index d = x.size();
  Eigen::VectorXd out(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    double z = theta[d * d + i];  // bias
    for (Eigen::Index j = 0; j < d; ++j) {
      z += theta[j * d + i] * x[j];  // column-major W(i, j)
    }
    out[i] = x[i] + delta * std::tanh(z);
  }
  return out;
}

/// Central finite difference of a scalar function, one coordinate at a time.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& point, double h = 1e-5) {
  Eigen::VectorXd grad(point.size());
  Eigen::VectorXd x = point;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double fp = f(x);
    x[i] = saved - h;
    const double fm = f(x);
    x[i] = saved;
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

inline double max_rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]) /
                                std::max({std::abs(a[i]), std::abs(b[i]), 1e-8}));
  }
  return worst;
}

}  // namespace emsa::testing
