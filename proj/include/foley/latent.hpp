#pragma once

#include <stdexcept>

#include <Eigen/Dense>

namespace foley {

/// h x w x c grid stored channel-major: index (c * h + row) * w + col.
/// At desk scale h is the mel axis, w the frame axis and c = 1.
struct Latent {
  int height = 0;
  int width = 0;
  int channels = 1;
  Eigen::ArrayXd values;

  Latent() = default;
  Latent(int h, int w, int c = 1) : height(h), width(w), channels(c), values(Eigen::ArrayXd::Zero(Eigen::Index{h} * w * c)) {}

  Eigen::Index size() const { return values.size(); }
  double& at(int row, int col, int ch = 0) { return values[(Eigen::Index{ch} * height + row) * width + col]; }
  double at(int row, int col, int ch = 0) const { return values[(Eigen::Index{ch} * height + row) * width + col]; }
  bool same_shape(const Latent& o) const { return height == o.height && width == o.width && channels == o.channels; }
};

inline void require_same_shape(const Latent& a, const Latent& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("latent shape mismatch");
}

}  // namespace foley
