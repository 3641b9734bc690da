#pragma once

#include <vector>

#include "emsa/network.hpp"

// Same-padded 2D correlation and 2x2 max-pooling kernels used by the conv
// layer kinds. Feature maps are flat vectors with index (c, i, j) mapped to
// (c*H + i)*W + j. Kernel weights use index ((o*C_in + c)*K + u)*K + v.

namespace emsa::conv {

/// y(o,i,j) = bias_o + sum_{c,u,v} w(o,c,u,v) * x(c, i+u-P, j+v-P), P = K/2.
/// `bias` may be null.
void forward(const ConvGeometry& g, const double* weights, const double* bias, const double* x,
             double* y);

/// Adjoint of `forward` w.r.t. the input: gx(c,i,j) = sum_{o,u,v} w(o,c,u,v) *
/// gy(o, i-u+P, j-v+P). Overwrites gx.
void backward_input(const ConvGeometry& g, const double* weights, const double* gy, double* gx);

/// Adjoint w.r.t. the weights: accumulates into gw (and gb unless null).
/// gw(o,c,u,v) += sum_{i,j} gy(o,i,j) * x(c, i+u-P, j+v-P); gb_o += sum_{i,j} gy(o,i,j).
void backward_weights(const ConvGeometry& g, const double* x, const double* gy, double* gw,
                      double* gb);

/// 2x2 max-pool with stride 2 over each channel; ties broken by the first
/// element in row-major scan order. argmax stores the flat input index
/// selected for each output cell.
void maxpool_forward(const ConvGeometry& g, const double* a, double* y, int* argmax);

/// Scatters p back through the recorded argmax selection. Overwrites out
/// (full pre-pool size) with zeros elsewhere.
void maxpool_scatter(const ConvGeometry& g, const double* p, const int* argmax, double* out);

}  // namespace emsa::conv
