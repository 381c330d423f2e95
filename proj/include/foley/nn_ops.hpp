#pragma once

#include <Eigen/Dense>

#include "foley/conditioning.hpp"

// Building blocks for the denoiser. Feature maps are C x W row-major matrices,
// one row per channel and one column per frame.
namespace foley::nn {

using RowMatrix = cond::RowMatrix;
using MatRef = cond::MatRef;
using VecRef = cond::VecRef;

/// Width-3 zero-padded patches, (C * 3) x W.
RowMatrix im2col3(const MatRef& x);
RowMatrix col2im3(const MatRef& cols, int channels);

struct ConvForward {
  RowMatrix cols;
  RowMatrix out;
};

/// weight: C_out x (C_in * 3), bias: C_out.
ConvForward conv3(const MatRef& x, const MatRef& weight, const VecRef& bias);

struct ConvGrads {
  RowMatrix input, weight;
  Eigen::VectorXd bias;
};
ConvGrads conv3_backward(const ConvForward& fwd, int channels_in, const MatRef& weight, const MatRef& d_out);

RowMatrix avg_pool2(const MatRef& x);
RowMatrix avg_pool2_backward(const MatRef& d_out);
RowMatrix upsample2(const MatRef& x);
RowMatrix upsample2_backward(const MatRef& d_out);

RowMatrix silu(const MatRef& x);
// d_out * silu'(x).
RowMatrix silu_backward(const MatRef& x, const MatRef& d_out);

/// [sin(t f_i), cos(t f_i)], f_i = 10000^(-i / (dim / 2)).
Eigen::VectorXd timestep_embedding(int t, int dim);

}  // namespace foley::nn
