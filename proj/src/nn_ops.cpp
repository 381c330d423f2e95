#include "foley/nn_ops.hpp"

#include <cmath>
#include <stdexcept>

namespace foley::nn {

RowMatrix im2col3(const MatRef& x) {
  const auto channels = x.rows(), width = x.cols();
  RowMatrix cols = RowMatrix::Zero(channels * 3, width);
  for (Eigen::Index c = 0; c < channels; ++c) {
    cols.block(c * 3, 1, 1, width - 1) = x.block(c, 0, 1, width - 1);
    cols.row(c * 3 + 1) = x.row(c);
    cols.block(c * 3 + 2, 0, 1, width - 1) = x.block(c, 1, 1, width - 1);
  }
  return cols;
}

RowMatrix col2im3(const MatRef& cols, int channels) {
  const auto width = cols.cols();
  RowMatrix x = RowMatrix::Zero(channels, width);
  for (Eigen::Index c = 0; c < channels; ++c) {
    x.block(c, 0, 1, width - 1) += cols.block(c * 3, 1, 1, width - 1);
    x.row(c) += cols.row(c * 3 + 1);
    x.block(c, 1, 1, width - 1) += cols.block(c * 3 + 2, 0, 1, width - 1);
  }
  return x;
}

ConvForward conv3(const MatRef& x, const MatRef& weight, const VecRef& bias) {
  if (x.cols() < 2 || weight.cols() != x.rows() * 3 || bias.size() != weight.rows()) {
    throw std::invalid_argument("conv shape mismatch");
  }
  ConvForward f;
  f.cols = im2col3(x);
  f.out.noalias() = weight * f.cols;
  f.out.colwise() += bias;
  return f;
}

ConvGrads conv3_backward(const ConvForward& fwd, int channels_in, const MatRef& weight, const MatRef& d_out) {
  ConvGrads g;
  g.weight.noalias() = d_out * fwd.cols.transpose();
  g.bias = d_out.rowwise().sum();
  RowMatrix d_cols;
  d_cols.noalias() = weight.transpose() * d_out;
  g.input = col2im3(d_cols, channels_in);
  return g;
}

RowMatrix avg_pool2(const MatRef& x) {
  const Eigen::Index w2 = x.cols() / 2;
  RowMatrix out(x.rows(), w2);
  for (Eigen::Index j = 0; j < w2; ++j) out.col(j) = 0.5 * (x.col(2 * j) + x.col(2 * j + 1));
  return out;
}

RowMatrix avg_pool2_backward(const MatRef& d_out) {
  RowMatrix d_x(d_out.rows(), d_out.cols() * 2);
  for (Eigen::Index j = 0; j < d_out.cols(); ++j) d_x.col(2 * j) = d_x.col(2 * j + 1) = 0.5 * d_out.col(j);
  return d_x;
}

RowMatrix upsample2(const MatRef& x) {
  RowMatrix out(x.rows(), x.cols() * 2);
  for (Eigen::Index j = 0; j < x.cols(); ++j) out.col(2 * j) = out.col(2 * j + 1) = x.col(j);
  return out;
}

RowMatrix upsample2_backward(const MatRef& d_out) {
  const Eigen::Index w2 = d_out.cols() / 2;
  RowMatrix d_x(d_out.rows(), w2);
  for (Eigen::Index j = 0; j < w2; ++j) d_x.col(j) = d_out.col(2 * j) + d_out.col(2 * j + 1);
  return d_x;
}

RowMatrix silu(const MatRef& x) {
  return (x.array() / (1.0 + (-x.array()).exp())).matrix();
}

RowMatrix silu_backward(const MatRef& x, const MatRef& d_out) {
  const Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> sig = 1.0 / (1.0 + (-x.array()).exp());
  return (d_out.array() * sig * (1.0 + x.array() * (1.0 - sig))).matrix();
}

Eigen::VectorXd timestep_embedding(int t, int dim) {
  if (dim < 2 || dim % 2 != 0) throw std::invalid_argument("embedding dim must be even");
  const int half = dim / 2;
  Eigen::VectorXd e(dim);
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * i / half);
    e[i] = std::sin(t * freq);
    e[half + i] = std::cos(t * freq);
  }
  return e;
}

}  // namespace foley::nn
