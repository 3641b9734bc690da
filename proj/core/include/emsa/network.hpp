#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "emsa/errors.hpp"

namespace emsa {

// Batches are stored one sample per column: a state batch for a layer with
// d-dimensional state and m samples is a d x m matrix.

enum class LayerKind {
  ResidualDense,   // x + delta * act(W x + b)
  ResidualConv2d,  // x + delta * act(W (*) x + b), same-padded, dims preserved
  Projection,      // maxpool2x2(act(W (*) x + b)), non-residual
  Classifier,      // W x + b, non-residual affine (logits / dense projection)
};

enum class Activation { Tanh, Identity };

enum class LossKind { SumSquaredScalarTarget, SoftmaxCrossEntropy };

/// Spatial metadata for conv-shaped layers (ResidualConv2d, Projection).
struct ConvGeometry {
  int in_channels = 0;
  int out_channels = 0;
  int height = 0;  // input spatial dims
  int width = 0;
  int kernel = 3;  // odd, zero-padded to preserve spatial dims
  bool pooled = false;

  int out_height() const { return pooled ? height / 2 : height; }
  int out_width() const { return pooled ? width / 2 : width; }
};

struct LayerSpec {
  LayerKind kind = LayerKind::ResidualDense;
  int in_dim = 0;
  int out_dim = 0;
  double delta = 1.0;  // ignored (treated as 1) for Projection/Classifier
  Activation activation = Activation::Tanh;
  ConvGeometry conv;  // meaningful only for conv kinds

  bool is_residual() const {
    return kind == LayerKind::ResidualDense || kind == LayerKind::ResidualConv2d;
  }
  bool is_conv() const {
    return kind == LayerKind::ResidualConv2d || kind == LayerKind::Projection;
  }
  /// Step size as used by the transition map (1 for non-residual kinds).
  double effective_delta() const { return is_residual() ? delta : 1.0; }

  /// Parameter vector length, fully determined by kind and dims.
  Eigen::Index param_count() const;

  /// Throws ShapeError on any violated invariant.
  void validate() const;
};

LayerSpec make_residual_dense(int dim, double delta, Activation act = Activation::Tanh);
LayerSpec make_residual_conv(int channels, int height, int width, double delta, int kernel = 3);
LayerSpec make_projection(int in_channels, int out_channels, int height, int width,
                          int kernel = 3);
LayerSpec make_classifier(int in_dim, int out_dim);

struct NetworkSpec {
  std::vector<LayerSpec> layers;
  LossKind loss_kind = LossKind::SumSquaredScalarTarget;
  double regularizer_weight = 0.0;

  int depth() const { return static_cast<int>(layers.size()); }
  int input_dim() const { return layers.front().in_dim; }
  int output_dim() const { return layers.back().out_dim; }
  /// State dimension entering layer n (n == depth() gives the output dim).
  int state_dim(int n) const;
  Eigen::Index total_param_count() const;

  void validate() const;
};

/// The control: one flat 64-bit parameter vector per layer.
struct ParamStack {
  std::vector<Eigen::VectorXd> layer_params;

  static ParamStack zeros(const NetworkSpec& net);

  int depth() const { return static_cast<int>(layer_params.size()); }
  Eigen::Index total_size() const;
  /// Throws ShapeError/NumericError if lengths mismatch or entries are non-finite.
  void validate_for(const NetworkSpec& net) const;

  Eigen::VectorXd& operator[](int n) { return layer_params[static_cast<std::size_t>(n)]; }
  const Eigen::VectorXd& operator[](int n) const {
    return layer_params[static_cast<std::size_t>(n)];
  }
};

/// A batch of sample input-label pairs. Exactly one of scalar_targets /
/// labels is populated, according to the network's loss kind.
struct Batch {
  Eigen::MatrixXd inputs;          // input_dim x m
  Eigen::VectorXd scalar_targets;  // regression targets, length m
  Eigen::VectorXi labels;          // class indices, length m

  Eigen::Index size() const { return inputs.cols(); }
  void validate_for(const NetworkSpec& net) const;
};

const char* to_string(LayerKind kind);
const char* to_string(Activation act);
const char* to_string(LossKind kind);

}  // namespace emsa
