#include "emsa/conv.hpp"

#include <algorithm>
#include <cstring>

namespace emsa::conv {

namespace {
inline int clamp_lo(int v) { return v > 0 ? v : 0; }
}  // namespace

void forward(const ConvGeometry& g, const double* weights, const double* bias, const double* x,
             double* y) {
  const int H = g.height, W = g.width, K = g.kernel, P = K / 2;
  const int C = g.in_channels, O = g.out_channels;
  const int plane = H * W;
  for (int o = 0; o < O; ++o) {
    double* yo = y + o * plane;
    const double b = bias ? bias[o] : 0.0;
    std::fill(yo, yo + plane, b);
    for (int c = 0; c < C; ++c) {
      const double* xc = x + c * plane;
      for (int u = 0; u < K; ++u) {
        const int di = u - P;
        const int i0 = clamp_lo(-di), i1 = std::min(H, H - di);
        for (int v = 0; v < K; ++v) {
          const int dj = v - P;
          const int j0 = clamp_lo(-dj), j1 = std::min(W, W - dj);
          const double w = weights[((o * C + c) * K + u) * K + v];
          if (w == 0.0) continue;
          for (int i = i0; i < i1; ++i) {
            const double* xrow = xc + (i + di) * W + dj;
            double* yrow = yo + i * W;
            for (int j = j0; j < j1; ++j) yrow[j] += w * xrow[j];
          }
        }
      }
    }
  }
}

void backward_input(const ConvGeometry& g, const double* weights, const double* gy, double* gx) {
  const int H = g.height, W = g.width, K = g.kernel, P = K / 2;
  const int C = g.in_channels, O = g.out_channels;
  const int plane = H * W;
  std::memset(gx, 0, sizeof(double) * static_cast<std::size_t>(C) * plane);
  for (int o = 0; o < O; ++o) {
    const double* go = gy + o * plane;
    for (int c = 0; c < C; ++c) {
      double* gc = gx + c * plane;
      for (int u = 0; u < K; ++u) {
        const int di = u - P;
        // gx(c,i,j) += w * gy(o, i-di, j-dj), valid when i-di in [0,H)
        const int i0 = clamp_lo(di), i1 = std::min(H, H + di);
        for (int v = 0; v < K; ++v) {
          const int dj = v - P;
          const int j0 = clamp_lo(dj), j1 = std::min(W, W + dj);
          const double w = weights[((o * C + c) * K + u) * K + v];
          if (w == 0.0) continue;
          for (int i = i0; i < i1; ++i) {
            const double* grow = go + (i - di) * W - dj;
            double* xrow = gc + i * W;
            for (int j = j0; j < j1; ++j) xrow[j] += w * grow[j];
          }
        }
      }
    }
  }
}

void backward_weights(const ConvGeometry& g, const double* x, const double* gy, double* gw,
                      double* gb) {
  const int H = g.height, W = g.width, K = g.kernel, P = K / 2;
  const int C = g.in_channels, O = g.out_channels;
  const int plane = H * W;
  for (int o = 0; o < O; ++o) {
    const double* go = gy + o * plane;
    if (gb) {
      double s = 0.0;
      for (int k = 0; k < plane; ++k) s += go[k];
      gb[o] += s;
    }
    for (int c = 0; c < C; ++c) {
      const double* xc = x + c * plane;
      for (int u = 0; u < K; ++u) {
        const int di = u - P;
        const int i0 = clamp_lo(-di), i1 = std::min(H, H - di);
        for (int v = 0; v < K; ++v) {
          const int dj = v - P;
          const int j0 = clamp_lo(-dj), j1 = std::min(W, W - dj);
          double acc = 0.0;
          for (int i = i0; i < i1; ++i) {
            const double* xrow = xc + (i + di) * W + dj;
            const double* grow = go + i * W;
            for (int j = j0; j < j1; ++j) acc += grow[j] * xrow[j];
          }
          gw[((o * C + c) * K + u) * K + v] += acc;
        }
      }
    }
  }
}

void maxpool_forward(const ConvGeometry& g, const double* a, double* y, int* argmax) {
  const int H = g.height, W = g.width, O = g.out_channels;
  const int Ho = H / 2, Wo = W / 2;
  for (int c = 0; c < O; ++c) {
    const double* ac = a + c * H * W;
    for (int i = 0; i < Ho; ++i) {
      for (int j = 0; j < Wo; ++j) {
        int best = (2 * i) * W + 2 * j;
        double bv = ac[best];
        const int cand[3] = {(2 * i) * W + 2 * j + 1, (2 * i + 1) * W + 2 * j,
                             (2 * i + 1) * W + 2 * j + 1};
        for (int k : cand) {
          if (ac[k] > bv) {  // strict: first index wins ties
            bv = ac[k];
            best = k;
          }
        }
        const int out = (c * Ho + i) * Wo + j;
        y[out] = bv;
        argmax[out] = c * H * W + best;
      }
    }
  }
}

void maxpool_scatter(const ConvGeometry& g, const double* p, const int* argmax, double* out) {
  const int n_in = g.out_channels * g.height * g.width;
  const int n_out = g.out_channels * (g.height / 2) * (g.width / 2);
  std::memset(out, 0, sizeof(double) * static_cast<std::size_t>(n_in));
  for (int k = 0; k < n_out; ++k) out[argmax[k]] += p[k];
}

}  // namespace emsa::conv
