#include "emsa/layers.hpp"

#include <cmath>
#include <vector>

#include "emsa/conv.hpp"

namespace emsa {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void check_state(const LayerSpec& spec, const MatrixXd& x, const VectorXd& theta) {
  if (x.rows() != spec.in_dim) {
    throw ShapeError("state dim " + std::to_string(x.rows()) + " != layer in_dim " +
                     std::to_string(spec.in_dim));
  }
  if (theta.size() != spec.param_count()) {
    throw ShapeError("param length " + std::to_string(theta.size()) + " != expected " +
                     std::to_string(spec.param_count()));
  }
  if (!x.allFinite()) {
    throw NumericError("non-finite state input");
  }
}

void check_costate(const LayerSpec& spec, const MatrixXd& x, const MatrixXd& p) {
  if (p.rows() != spec.out_dim || p.cols() != x.cols()) {
    throw ShapeError("costate batch shape mismatch");
  }
}

MatrixXd activate(const MatrixXd& z, Activation act) {
  return act == Activation::Tanh ? z.array().tanh().matrix() : z;
}

// Dense layers store W (out x in) column-major, then b.
struct DenseView {
  Eigen::Map<const MatrixXd> W;
  Eigen::Map<const VectorXd> b;
  DenseView(const LayerSpec& spec, const VectorXd& theta)
      : W(theta.data(), spec.out_dim, spec.in_dim),
        b(theta.data() + static_cast<Eigen::Index>(spec.out_dim) * spec.in_dim, spec.out_dim) {}
};

struct DenseGradView {
  Eigen::Map<MatrixXd> W;
  Eigen::Map<VectorXd> b;
  DenseGradView(const LayerSpec& spec, VectorXd& grad)
      : W(grad.data(), spec.out_dim, spec.in_dim),
        b(grad.data() + static_cast<Eigen::Index>(spec.out_dim) * spec.in_dim, spec.out_dim) {}
};

// Conv layer param layout: kernel weights ((o*C+c)*K+u)*K+v, then bias (O).
Eigen::Index conv_weight_count(const ConvGeometry& g) {
  return static_cast<Eigen::Index>(g.kernel) * g.kernel * g.in_channels * g.out_channels;
}

// Per-sample scratch for conv kinds: pre-activation z and activation a over
// the full (unpooled) output plane.
struct ConvScratch {
  VectorXd z, a;
  std::vector<int> argmax;
  explicit ConvScratch(const ConvGeometry& g)
      : z(static_cast<Eigen::Index>(g.out_channels) * g.height * g.width),
        a(z.size()),
        argmax(static_cast<std::size_t>(g.out_channels) * (g.height / 2) * (g.width / 2)) {}
};

void conv_preactivation(const ConvGeometry& g, const VectorXd& theta, const double* x,
                        ConvScratch& s, Activation act) {
  conv::forward(g, theta.data(), theta.data() + conv_weight_count(g), x, s.z.data());
  s.a = act == Activation::Tanh ? s.z.array().tanh().matrix() : s.z;
}

}  // namespace

Eigen::MatrixXd layer_forward(const LayerSpec& spec, const Eigen::MatrixXd& x,
                              const Eigen::VectorXd& theta) {
  check_state(spec, x, theta);
  const Eigen::Index m = x.cols();
  switch (spec.kind) {
    case LayerKind::ResidualDense: {
      DenseView t(spec, theta);
      MatrixXd z = (t.W * x).colwise() + t.b;
      return x + spec.delta * activate(z, spec.activation);
    }
    case LayerKind::Classifier: {
      DenseView t(spec, theta);
      return (t.W * x).colwise() + t.b;
    }
    case LayerKind::ResidualConv2d: {
      MatrixXd y(spec.out_dim, m);
      ConvScratch s(spec.conv);
      for (Eigen::Index i = 0; i < m; ++i) {
        conv_preactivation(spec.conv, theta, x.col(i).data(), s, spec.activation);
        y.col(i) = x.col(i) + spec.delta * s.a;
      }
      return y;
    }
    case LayerKind::Projection: {
      MatrixXd y(spec.out_dim, m);
      ConvScratch s(spec.conv);
      for (Eigen::Index i = 0; i < m; ++i) {
        conv_preactivation(spec.conv, theta, x.col(i).data(), s, spec.activation);
        conv::maxpool_forward(spec.conv, s.a.data(), y.col(i).data(), s.argmax.data());
      }
      return y;
    }
  }
  throw ShapeError("unknown layer kind");
}

Eigen::MatrixXd layer_pullback_x(const LayerSpec& spec, const Eigen::MatrixXd& x,
                                 const Eigen::VectorXd& theta, const Eigen::MatrixXd& p) {
  check_state(spec, x, theta);
  check_costate(spec, x, p);
  const Eigen::Index m = x.cols();
  switch (spec.kind) {
    case LayerKind::ResidualDense: {
      DenseView t(spec, theta);
      if (spec.activation == Activation::Identity) {
        return p + spec.delta * (t.W.transpose() * p);
      }
      MatrixXd a = ((t.W * x).colwise() + t.b).array().tanh().matrix();
      MatrixXd u = ((1.0 - a.array().square()) * p.array()).matrix();
      return p + spec.delta * (t.W.transpose() * u);
    }
    case LayerKind::Classifier: {
      DenseView t(spec, theta);
      return t.W.transpose() * p;
    }
    case LayerKind::ResidualConv2d: {
      MatrixXd out(spec.in_dim, m);
      ConvScratch s(spec.conv);
      VectorXd u(spec.out_dim), gx(spec.in_dim);
      for (Eigen::Index i = 0; i < m; ++i) {
        conv_preactivation(spec.conv, theta, x.col(i).data(), s, spec.activation);
        if (spec.activation == Activation::Tanh) {
          u = ((1.0 - s.a.array().square()) * p.col(i).array()).matrix();
        } else {
          u = p.col(i);
        }
        conv::backward_input(spec.conv, theta.data(), u.data(), gx.data());
        out.col(i) = p.col(i) + spec.delta * gx;
      }
      return out;
    }
    case LayerKind::Projection: {
      MatrixXd out(spec.in_dim, m);
      ConvScratch s(spec.conv);
      const Eigen::Index plane =
          static_cast<Eigen::Index>(spec.conv.out_channels) * spec.conv.height * spec.conv.width;
      VectorXd pt(plane), u(plane), gx(spec.in_dim), pool_scratch(spec.out_dim);
      for (Eigen::Index i = 0; i < m; ++i) {
        conv_preactivation(spec.conv, theta, x.col(i).data(), s, spec.activation);
        conv::maxpool_forward(spec.conv, s.a.data(), pool_scratch.data(), s.argmax.data());
        conv::maxpool_scatter(spec.conv, p.col(i).data(), s.argmax.data(), pt.data());
        if (spec.activation == Activation::Tanh) {
          u = ((1.0 - s.a.array().square()) * pt.array()).matrix();
        } else {
          u = pt;
        }
        conv::backward_input(spec.conv, theta.data(), u.data(), gx.data());
        out.col(i) = gx;
      }
      return out;
    }
  }
  throw ShapeError("unknown layer kind");
}

Eigen::VectorXd layer_grad_theta(const LayerSpec& spec, const Eigen::MatrixXd& x,
                                 const Eigen::VectorXd& theta, const Eigen::MatrixXd& p) {
  check_state(spec, x, theta);
  check_costate(spec, x, p);
  const Eigen::Index m = x.cols();
  VectorXd grad = VectorXd::Zero(theta.size());
  switch (spec.kind) {
    case LayerKind::ResidualDense: {
      DenseView t(spec, theta);
      DenseGradView g(spec, grad);
      MatrixXd u;
      if (spec.activation == Activation::Identity) {
        u = spec.delta * p;
      } else {
        MatrixXd a = ((t.W * x).colwise() + t.b).array().tanh().matrix();
        u = spec.delta * ((1.0 - a.array().square()) * p.array()).matrix();
      }
      g.W = u * x.transpose();
      g.b = u.rowwise().sum();
      return grad;
    }
    case LayerKind::Classifier: {
      DenseGradView g(spec, grad);
      g.W = p * x.transpose();
      g.b = p.rowwise().sum();
      return grad;
    }
    case LayerKind::ResidualConv2d:
    case LayerKind::Projection: {
      const bool pooled = spec.kind == LayerKind::Projection;
      const double scale = pooled ? 1.0 : spec.delta;
      ConvScratch s(spec.conv);
      const Eigen::Index plane =
          static_cast<Eigen::Index>(spec.conv.out_channels) * spec.conv.height * spec.conv.width;
      VectorXd pt(plane), u(plane), pool_scratch(spec.out_dim);
      double* gw = grad.data();
      double* gb = grad.data() + conv_weight_count(spec.conv);
      for (Eigen::Index i = 0; i < m; ++i) {
        conv_preactivation(spec.conv, theta, x.col(i).data(), s, spec.activation);
        const double* pp;
        if (pooled) {
          conv::maxpool_forward(spec.conv, s.a.data(), pool_scratch.data(), s.argmax.data());
          conv::maxpool_scatter(spec.conv, p.col(i).data(), s.argmax.data(), pt.data());
          pp = pt.data();
        } else {
          pp = p.col(i).data();
        }
        if (spec.activation == Activation::Tanh) {
          u = scale * ((1.0 - s.a.array().square()) *
                       Eigen::Map<const Eigen::ArrayXd>(pp, plane))
                          .matrix();
        } else {
          u = scale * Eigen::Map<const VectorXd>(pp, plane);
        }
        conv::backward_weights(spec.conv, x.col(i).data(), u.data(), gw, gb);
      }
      return grad;
    }
  }
  throw ShapeError("unknown layer kind");
}

Eigen::VectorXd layer_mixed_grad_theta(const LayerSpec& spec, const Eigen::MatrixXd& x,
                                       const Eigen::VectorXd& theta, const Eigen::MatrixXd& p,
                                       const Eigen::MatrixXd& r) {
  check_state(spec, x, theta);
  check_costate(spec, x, p);
  if (r.rows() != spec.in_dim || r.cols() != x.cols()) {
    throw ShapeError("mixed-product direction batch shape mismatch");
  }
  const Eigen::Index m = x.cols();
  VectorXd grad = VectorXd::Zero(theta.size());
  switch (spec.kind) {
    case LayerKind::ResidualDense: {
      // phi = r.p + delta * (W r).(s .* p); differentiate in (W, b).
      DenseView t(spec, theta);
      DenseGradView g(spec, grad);
      MatrixXd w = t.W * r;
      if (spec.activation == Activation::Identity) {
        g.W = spec.delta * (p * r.transpose());
        return grad;
      }
      MatrixXd a = ((t.W * x).colwise() + t.b).array().tanh().matrix();
      MatrixXd s = (1.0 - a.array().square()).matrix();
      MatrixXd u = (s.array() * p.array()).matrix();
      MatrixXd gy2 = (w.array() * p.array() * (-2.0 * a.array() * s.array())).matrix();
      g.W = spec.delta * (u * r.transpose() + gy2 * x.transpose());
      g.b = spec.delta * gy2.rowwise().sum();
      return grad;
    }
    case LayerKind::Classifier: {
      // phi = r.(W^T p); only the direct W dependence contributes.
      DenseGradView g(spec, grad);
      g.W = p * r.transpose();
      return grad;
    }
    case LayerKind::ResidualConv2d:
    case LayerKind::Projection: {
      const bool pooled = spec.kind == LayerKind::Projection;
      const double scale = pooled ? 1.0 : spec.delta;
      ConvScratch s(spec.conv);
      const Eigen::Index plane =
          static_cast<Eigen::Index>(spec.conv.out_channels) * spec.conv.height * spec.conv.width;
      VectorXd pt(plane), u(plane), w(plane), gy2(plane), pool_scratch(spec.out_dim);
      double* gw = grad.data();
      double* gb = grad.data() + conv_weight_count(spec.conv);
      for (Eigen::Index i = 0; i < m; ++i) {
        conv_preactivation(spec.conv, theta, x.col(i).data(), s, spec.activation);
        const double* pp;
        if (pooled) {
          conv::maxpool_forward(spec.conv, s.a.data(), pool_scratch.data(), s.argmax.data());
          conv::maxpool_scatter(spec.conv, p.col(i).data(), s.argmax.data(), pt.data());
          pp = pt.data();
        } else {
          pp = p.col(i).data();
        }
        Eigen::Map<const Eigen::ArrayXd> pa(pp, plane);
        // w = conv(r) without bias; phi = scale * sum_j s_j * pa_j * w_j.
        conv::forward(spec.conv, theta.data(), nullptr, r.col(i).data(), w.data());
        if (spec.activation == Activation::Tanh) {
          Eigen::ArrayXd sa = 1.0 - s.a.array().square();
          u = scale * (sa * pa).matrix();
          gy2 = scale * (w.array() * pa * (-2.0 * s.a.array() * sa)).matrix();
        } else {
          u = scale * pa.matrix();
          gy2.setZero();
        }
        // Direct dependence of conv(r, W) on W, then the dependence through s.
        conv::backward_weights(spec.conv, r.col(i).data(), u.data(), gw, nullptr);
        conv::backward_weights(spec.conv, x.col(i).data(), gy2.data(), gw, gb);
      }
      return grad;
    }
  }
  throw ShapeError("unknown layer kind");
}

TerminalLoss terminal_loss(const NetworkSpec& net, const Eigen::MatrixXd& x_final,
                           const Batch& batch) {
  const int d = net.output_dim();
  if (x_final.rows() != d) {
    throw ShapeError("final state dim != network output dim");
  }
  const Eigen::Index m = x_final.cols();
  TerminalLoss out;
  out.per_sample.resize(m);
  out.grad.resize(d, m);
  if (net.loss_kind == LossKind::SumSquaredScalarTarget) {
    if (batch.scalar_targets.size() != m) {
      throw ShapeError("loss kind sum_squared requires scalar targets per sample");
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      const double s = x_final.col(i).sum() - batch.scalar_targets[i];
      out.per_sample[i] = s * s;
      out.grad.col(i).setConstant(2.0 * s);
    }
  } else {
    if (batch.labels.size() != m) {
      throw ShapeError("loss kind cross_entropy requires class labels per sample");
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      const int y = batch.labels[i];
      if (y < 0 || y >= d) {
        throw ShapeError("class index out of range at sample " + std::to_string(i));
      }
      const auto logits = x_final.col(i);
      const double zmax = logits.maxCoeff();
      const double lse = zmax + std::log((logits.array() - zmax).exp().sum());
      out.per_sample[i] = lse - logits[y];
      out.grad.col(i) = (logits.array() - lse).exp().matrix();
      out.grad(y, i) -= 1.0;
    }
  }
  return out;
}

Regularizer regularizer(const Eigen::VectorXd& theta, double weight) {
  if (weight < 0.0) {
    throw ShapeError("regularizer weight must be nonnegative");
  }
  Regularizer r;
  r.value = weight * theta.squaredNorm();
  r.grad = 2.0 * weight * theta;
  return r;
}

}  // namespace emsa
