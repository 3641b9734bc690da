#include "emsa/network.hpp"

namespace emsa {

Eigen::Index LayerSpec::param_count() const {
  switch (kind) {
    case LayerKind::ResidualDense:
    case LayerKind::Classifier:
      return static_cast<Eigen::Index>(in_dim) * out_dim + out_dim;
    case LayerKind::ResidualConv2d:
    case LayerKind::Projection:
      return static_cast<Eigen::Index>(conv.kernel) * conv.kernel * conv.in_channels *
                 conv.out_channels +
             conv.out_channels;
  }
  return 0;
}

void LayerSpec::validate() const {
  if (in_dim <= 0 || out_dim <= 0) {
    throw ShapeError("layer dims must be positive");
  }
  if (is_residual()) {
    if (in_dim != out_dim) {
      throw ShapeError("residual layer requires in_dim == out_dim");
    }
    if (!(delta > 0.0)) {
      throw ShapeError("residual layer requires delta > 0");
    }
  }
  if (is_conv()) {
    if (conv.in_channels <= 0 || conv.out_channels <= 0 || conv.height <= 0 || conv.width <= 0) {
      throw ShapeError("conv layer requires positive channel/spatial dims");
    }
    if (conv.kernel <= 0 || conv.kernel % 2 == 0) {
      throw ShapeError("conv kernel must be positive and odd");
    }
    if (in_dim != conv.in_channels * conv.height * conv.width) {
      throw ShapeError("conv in_dim does not match channels*height*width");
    }
    if (out_dim != conv.out_channels * conv.out_height() * conv.out_width()) {
      throw ShapeError("conv out_dim does not match output geometry");
    }
    if (kind == LayerKind::ResidualConv2d &&
        (conv.in_channels != conv.out_channels || conv.pooled)) {
      throw ShapeError("residual conv requires equal channels and no pooling");
    }
  }
}

LayerSpec make_residual_dense(int dim, double delta, Activation act) {
  LayerSpec s;
  s.kind = LayerKind::ResidualDense;
  s.in_dim = dim;
  s.out_dim = dim;
  s.delta = delta;
  s.activation = act;
  return s;
}

LayerSpec make_residual_conv(int channels, int height, int width, double delta, int kernel) {
  LayerSpec s;
  s.kind = LayerKind::ResidualConv2d;
  s.conv = {channels, channels, height, width, kernel, /*pooled=*/false};
  s.in_dim = channels * height * width;
  s.out_dim = s.in_dim;
  s.delta = delta;
  return s;
}

LayerSpec make_projection(int in_channels, int out_channels, int height, int width, int kernel) {
  LayerSpec s;
  s.kind = LayerKind::Projection;
  s.conv = {in_channels, out_channels, height, width, kernel, /*pooled=*/true};
  s.in_dim = in_channels * height * width;
  s.out_dim = out_channels * s.conv.out_height() * s.conv.out_width();
  return s;
}

LayerSpec make_classifier(int in_dim, int out_dim) {
  LayerSpec s;
  s.kind = LayerKind::Classifier;
  s.in_dim = in_dim;
  s.out_dim = out_dim;
  s.activation = Activation::Identity;
  return s;
}

int NetworkSpec::state_dim(int n) const {
  if (n < 0 || n > depth()) {
    throw ShapeError("state index out of range");
  }
  return n == depth() ? layers.back().out_dim : layers[static_cast<std::size_t>(n)].in_dim;
}

Eigen::Index NetworkSpec::total_param_count() const {
  Eigen::Index total = 0;
  for (const LayerSpec& l : layers) total += l.param_count();
  return total;
}

void NetworkSpec::validate() const {
  if (layers.empty()) {
    throw ShapeError("network has no layers");
  }
  if (regularizer_weight < 0.0) {
    throw ShapeError("regularizer weight must be nonnegative");
  }
  for (const LayerSpec& l : layers) l.validate();
  for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
    if (layers[i].out_dim != layers[i + 1].in_dim) {
      throw ShapeError("layer " + std::to_string(i) + " out_dim != layer " +
                       std::to_string(i + 1) + " in_dim");
    }
  }
}

ParamStack ParamStack::zeros(const NetworkSpec& net) {
  ParamStack p;
  p.layer_params.reserve(net.layers.size());
  for (const LayerSpec& l : net.layers) {
    p.layer_params.push_back(Eigen::VectorXd::Zero(l.param_count()));
  }
  return p;
}

Eigen::Index ParamStack::total_size() const {
  Eigen::Index total = 0;
  for (const Eigen::VectorXd& v : layer_params) total += v.size();
  return total;
}

void ParamStack::validate_for(const NetworkSpec& net) const {
  if (depth() != net.depth()) {
    throw ShapeError("param stack depth != network depth");
  }
  for (int n = 0; n < depth(); ++n) {
    if ((*this)[n].size() != net.layers[static_cast<std::size_t>(n)].param_count()) {
      throw ShapeError("param vector length mismatch at layer " + std::to_string(n));
    }
    if (!(*this)[n].allFinite()) {
      throw NumericError("non-finite parameter at layer " + std::to_string(n));
    }
  }
}

void Batch::validate_for(const NetworkSpec& net) const {
  if (inputs.rows() != net.input_dim()) {
    throw ShapeError("batch input dim != network input dim");
  }
  if (net.loss_kind == LossKind::SumSquaredScalarTarget) {
    if (scalar_targets.size() != inputs.cols()) {
      throw ShapeError("scalar target count != sample count");
    }
  } else {
    if (labels.size() != inputs.cols()) {
      throw ShapeError("label count != sample count");
    }
    const int classes = net.output_dim();
    for (Eigen::Index i = 0; i < labels.size(); ++i) {
      if (labels[i] < 0 || labels[i] >= classes) {
        throw ShapeError("class index out of range at sample " + std::to_string(i));
      }
    }
  }
}

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::ResidualDense: return "residual_dense";
    case LayerKind::ResidualConv2d: return "residual_conv2d";
    case LayerKind::Projection: return "projection";
    case LayerKind::Classifier: return "classifier";
  }
  return "?";
}

const char* to_string(Activation act) {
  return act == Activation::Tanh ? "tanh" : "identity";
}

const char* to_string(LossKind kind) {
  return kind == LossKind::SumSquaredScalarTarget ? "sum_squared_scalar_target"
                                                  : "softmax_cross_entropy";
}

}  // namespace emsa
