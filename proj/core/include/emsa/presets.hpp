#pragma once

#include "emsa/network.hpp"

// Experiment architectures at their published sizes. The desk-scale MNIST
// runs use the dense preset; the conv preset matches the residual CNN layout
// (two projection layers at the input, a stack of residual conv layers, one
// fully-connected classifier).

namespace emsa {

/// Scalar sine regression through a d-dimensional residual tanh stack:
/// N = T/delta layers, loss (sum_i x_i - sin x)^2. Defaults: T=5, delta=0.25
/// (20 layers), d=5.
NetworkSpec sine_network(int dim = 5, double T = 5.0, double delta = 0.25);

/// 28x28 grayscale classifier: affine input projection to `hidden`, then
/// `residual_layers` residual dense tanh layers with step `delta`, then an
/// affine classifier to 10 logits with softmax cross-entropy.
NetworkSpec mnist_dense_network(int hidden = 64, int residual_layers = 7, double delta = 0.5);

/// Residual CNN: two conv projections (1->channels at 28x28, channels->
/// channels at 14x14, each with tanh and 2x2 max-pool), `residual_layers`
/// residual 3x3 conv layers at 7x7, one classifier. Defaults match channels
/// = 32, 7 residual layers with delta = 0.5.
NetworkSpec mnist_conv_network(int channels = 32, int residual_layers = 7, double delta = 0.5);

}  // namespace emsa
