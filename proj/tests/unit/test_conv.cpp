#include <doctest.h>

#include "emsa/conv.hpp"
#include "support/oracles.hpp"

using namespace emsa;
using emsa::testing::random_vector;

namespace {

// Independent gather-style reimplementation of the same-padded correlation.
Eigen::VectorXd conv_oracle(const ConvGeometry& g, const Eigen::VectorXd& w,
                            const Eigen::VectorXd& b, const Eigen::VectorXd& x) {
  const int H = g.height, W = g.width, K = g.kernel, P = K / 2;
  Eigen::VectorXd y(static_cast<Eigen::Index>(g.out_channels) * H * W);
  for (int o = 0; o < g.out_channels; ++o) {
    for (int i = 0; i < H; ++i) {
      for (int j = 0; j < W; ++j) {
        double acc = b.size() ? b[o] : 0.0;
        for (int c = 0; c < g.in_channels; ++c) {
          for (int u = 0; u < K; ++u) {
            for (int v = 0; v < K; ++v) {
              const int ii = i + u - P, jj = j + v - P;
              if (ii < 0 || ii >= H || jj < 0 || jj >= W) continue;
              acc += w[((o * g.in_channels + c) * K + u) * K + v] * x[(c * H + ii) * W + jj];
            }
          }
        }
        y[(o * H + i) * W + j] = acc;
      }
    }
  }
  return y;
}

}  // namespace

TEST_CASE("conv forward matches the gather-style oracle") {
  ConvGeometry g{2, 3, 5, 4, 3, false};
  std::mt19937_64 rng(5);
  const Eigen::VectorXd w = random_vector(3 * 3 * 2 * 3, rng);
  const Eigen::VectorXd b = random_vector(3, rng);
  const Eigen::VectorXd x = random_vector(2 * 5 * 4, rng);
  Eigen::VectorXd y(3 * 5 * 4);
  conv::forward(g, w.data(), b.data(), x.data(), y.data());
  CHECK((y - conv_oracle(g, w, b, x)).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("backward_input is the adjoint of forward") {
  ConvGeometry g{3, 2, 4, 6, 3, false};
  std::mt19937_64 rng(9);
  const Eigen::VectorXd w = random_vector(3 * 3 * 3 * 2, rng);
  const Eigen::VectorXd x = random_vector(3 * 4 * 6, rng);
  const Eigen::VectorXd gy = random_vector(2 * 4 * 6, rng);
  Eigen::VectorXd y(2 * 4 * 6), gx(3 * 4 * 6);
  conv::forward(g, w.data(), nullptr, x.data(), y.data());
  conv::backward_input(g, w.data(), gy.data(), gx.data());
  // <conv(x), gy> == <x, conv^T(gy)>
  CHECK(y.dot(gy) == doctest::Approx(x.dot(gx)).epsilon(1e-12));
}

TEST_CASE("backward_weights matches finite differences of <gy, conv(x)>") {
  ConvGeometry g{2, 2, 4, 4, 3, false};
  std::mt19937_64 rng(13);
  const Eigen::VectorXd x = random_vector(2 * 4 * 4, rng);
  const Eigen::VectorXd gy = random_vector(2 * 4 * 4, rng);
  Eigen::VectorXd theta = random_vector(3 * 3 * 2 * 2 + 2, rng);
  const auto value = [&](const Eigen::VectorXd& th) {
    Eigen::VectorXd y(2 * 4 * 4);
    conv::forward(g, th.data(), th.data() + 3 * 3 * 2 * 2, x.data(), y.data());
    return y.dot(gy);
  };
  Eigen::VectorXd analytic = Eigen::VectorXd::Zero(theta.size());
  conv::backward_weights(g, x.data(), gy.data(), analytic.data(),
                         analytic.data() + 3 * 3 * 2 * 2);
  const Eigen::VectorXd numeric = emsa::testing::fd_gradient(value, theta);
  CHECK(emsa::testing::max_rel_err(analytic, numeric) < 1e-6);
}

TEST_CASE("maxpool picks block maxima and breaks ties toward the first index") {
  ConvGeometry g{1, 1, 4, 4, 3, true};
  Eigen::VectorXd a(16);
  // clang-format off
  a << 1, 2, 5, 5,
       3, 3, 5, 5,
       7, 7, 0, 1,
       7, 7, 2, 0;
  // clang-format on
  Eigen::VectorXd y(4);
  int argmax[4];
  conv::maxpool_forward(g, a.data(), y.data(), argmax);
  CHECK(y[0] == 3.0);
  CHECK(y[1] == 5.0);
  CHECK(y[2] == 7.0);
  CHECK(y[3] == 2.0);
  CHECK(argmax[1] == 2);   // four-way tie: row-major first
  CHECK(argmax[2] == 8);   // four-way tie
  CHECK(argmax[0] == 4);   // two-way tie between (1,0) and (1,1)

  Eigen::VectorXd p(4);
  p << 1, 2, 3, 4;
  Eigen::VectorXd scattered(16);
  conv::maxpool_scatter(g, p.data(), argmax, scattered.data());
  CHECK(scattered[4] == 1.0);
  CHECK(scattered[2] == 2.0);
  CHECK(scattered[8] == 3.0);
  CHECK(scattered.sum() == doctest::Approx(10.0));
}
