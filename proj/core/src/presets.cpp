#include "emsa/presets.hpp"

#include <cmath>

namespace emsa {

NetworkSpec sine_network(int dim, double T, double delta) {
  NetworkSpec net;
  net.loss_kind = LossKind::SumSquaredScalarTarget;
  const int N = static_cast<int>(std::lround(T / delta));
  net.layers.reserve(static_cast<std::size_t>(N));
  for (int n = 0; n < N; ++n) {
    net.layers.push_back(make_residual_dense(dim, delta));
  }
  net.validate();
  return net;
}

NetworkSpec mnist_dense_network(int hidden, int residual_layers, double delta) {
  NetworkSpec net;
  net.loss_kind = LossKind::SoftmaxCrossEntropy;
  net.layers.push_back(make_classifier(28 * 28, hidden));  // affine input projection
  for (int n = 0; n < residual_layers; ++n) {
    net.layers.push_back(make_residual_dense(hidden, delta));
  }
  net.layers.push_back(make_classifier(hidden, 10));
  net.validate();
  return net;
}

NetworkSpec mnist_conv_network(int channels, int residual_layers, double delta) {
  NetworkSpec net;
  net.loss_kind = LossKind::SoftmaxCrossEntropy;
  net.layers.push_back(make_projection(1, channels, 28, 28));
  net.layers.push_back(make_projection(channels, channels, 14, 14));
  for (int n = 0; n < residual_layers; ++n) {
    net.layers.push_back(make_residual_conv(channels, 7, 7, delta));
  }
  net.layers.push_back(make_classifier(channels * 7 * 7, 10));
  net.validate();
  return net;
}

}  // namespace emsa
