#include "foley/conditioning.hpp"

#include <cmath>
#include <stdexcept>

namespace foley::cond {

MaskTrack::MaskTrack(int frames, int height, int width, std::uint8_t fill)
    : frames_(frames), height_(height), width_(width),
      cells_(static_cast<std::size_t>(frames) * height * width, fill ? 1 : 0) {}

void MaskTrack::fill_region(int t, const synth::Region& region, std::uint8_t v) {
  for (int r = region.row; r < region.row + region.height; ++r) {
    for (int c = region.col; c < region.col + region.width; ++c) set(t, r, c, v);
  }
}

bool event_active(const synth::Event& e, int frame, double fps) {
  const double lo = frame / fps;
  const double hi = (frame + 1) / fps;
  return e.onset < hi && e.end() > lo;
}

namespace {

void check_region(const synth::Region& r, const VisualGrid& grid) {
  if (r.height < 1 || r.width < 1 || r.row < 0 || r.col < 0 || r.row + r.height > grid.height ||
      r.col + r.width > grid.width) {
    throw std::invalid_argument("region out of bounds");
  }
}

double overlap(const MaskTrack& mask, int t, const synth::Region& r) {
  int on = 0;
  for (int i = r.row; i < r.row + r.height; ++i) {
    for (int j = r.col; j < r.col + r.width; ++j) on += mask.at(t, i, j);
  }
  return static_cast<double>(on) / (r.height * r.width);
}

}  // namespace

RowMatrix toy_visual_features(const synth::EventScript& script, const MaskTrack* mask, const VisualGrid& grid) {
  if (mask && (mask->frames() != grid.frames || mask->height() != grid.height || mask->width() != grid.width)) {
    throw std::invalid_argument("mask shape mismatch");
  }
  RowMatrix tokens = RowMatrix::Zero(grid.frames, grid.channels);
  for (const auto& e : script.events) {
    check_region(e.region, grid);
    if (e.class_id < 0 || e.class_id >= grid.channels - 1) throw std::invalid_argument("unknown class");
    for (int t = 0; t < grid.frames; ++t) {
      if (!event_active(e, t, grid.fps)) continue;
      const double cover = mask ? overlap(*mask, t, e.region) : 1.0;
      tokens(t, e.class_id) += e.gain * cover;
    }
  }
  for (int t = 0; t < grid.frames; ++t) {
    tokens(t, grid.channels - 1) = std::sin(static_cast<double>(t) / grid.frames);
  }
  return tokens;
}

VisualCondition make_visual_condition(const synth::EventScript& script, const MaskTrack* mask, const VisualGrid& grid) {
  VisualCondition vc;
  vc.full = toy_visual_features(script, nullptr, grid);
  vc.masked = mask ? toy_visual_features(script, mask, grid) : vc.full;
  return vc;
}

RowMatrix mask_fuse(const MatRef& visual, const MatRef& masked, const MatRef& weight) {
  if (visual.rows() != masked.rows() || visual.cols() != masked.cols() || weight.rows() != masked.cols() ||
      weight.cols() != masked.cols()) {
    throw std::invalid_argument("feature shape mismatch");
  }
  const Eigen::RowVectorXd gap = masked.colwise().mean();
  const Eigen::RowVectorXd scale = gap * weight;
  RowMatrix out = masked.array().rowwise() * scale.array();
  out += visual;
  return out;
}

MaskFuseGrads mask_fuse_backward(const MatRef& masked, const MatRef& weight, const MatRef& d_out) {
  const Eigen::RowVectorXd gap = masked.colwise().mean();
  const Eigen::RowVectorXd scale = gap * weight;
  const Eigen::RowVectorXd d_scale = (d_out.array() * masked.array()).colwise().sum();
  MaskFuseGrads g;
  g.visual = d_out;
  g.weight = gap.transpose() * d_scale;
  const Eigen::RowVectorXd d_gap = d_scale * weight.transpose();
  g.masked = d_out.array().rowwise() * scale.array();
  g.masked.rowwise() += d_gap / static_cast<double>(masked.rows());
  return g;
}

AttentionForward cross_attention(const MatRef& queries, const MatRef& context, const AttentionWeights& w) {
  if (queries.cols() != w.query.rows() || context.cols() != w.key.rows() || context.cols() != w.value.rows() ||
      w.query.cols() != w.key.cols() || w.key.cols() != w.value.cols()) {
    throw std::invalid_argument("attention shape mismatch");
  }
  AttentionForward f;
  f.q = queries * w.query;
  f.k = context * w.key;
  f.v = context * w.value;
  const double scale = 1.0 / std::sqrt(static_cast<double>(w.query.cols()));
  f.probs = (f.q * f.k.transpose()) * scale;
  for (Eigen::Index i = 0; i < f.probs.rows(); ++i) {
    const double peak = f.probs.row(i).maxCoeff();
    f.probs.row(i) = (f.probs.row(i).array() - peak).exp();
    f.probs.row(i) /= f.probs.row(i).sum();
  }
  f.out = f.probs * f.v;
  return f;
}

AttentionGrads cross_attention_backward(const MatRef& queries, const MatRef& context, const AttentionWeights& w,
                                        const AttentionForward& f, const MatRef& d_out) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(w.query.cols()));
  const RowMatrix d_probs = d_out * f.v.transpose();
  const RowMatrix d_v = f.probs.transpose() * d_out;
  // Softmax Jacobian, row by row.
  RowMatrix d_logits = f.probs.array() * (d_probs.colwise() - (d_probs.array() * f.probs.array()).rowwise().sum().matrix()).array();
  d_logits *= scale;
  const RowMatrix d_q = d_logits * f.k;
  const RowMatrix d_k = d_logits.transpose() * f.q;
  AttentionGrads g;
  g.wq = queries.transpose() * d_q;
  g.wk = context.transpose() * d_k;
  g.wv = context.transpose() * d_v;
  g.queries = d_q * w.query.transpose();
  g.context = d_k * w.key.transpose() + d_v * w.value.transpose();
  return g;
}

SignalForward encode_signal(const loudness::LoudnessCurve& curve, const SignalMlp& mlp) {
  if (static_cast<Eigen::Index>(curve.size()) != mlp.w1.cols()) throw std::invalid_argument("curve length mismatch");
  const Eigen::Map<const Eigen::VectorXd> c(curve.values.data(), static_cast<Eigen::Index>(curve.size()));
  SignalForward f;
  f.hidden = (mlp.w1 * c + mlp.b1).array().tanh();
  f.out = mlp.w2 * f.hidden + mlp.b2;
  return f;
}

SignalGrads encode_signal_backward(const loudness::LoudnessCurve& curve, const SignalMlp& mlp,
                                   const SignalForward& f, const VecRef& d_out) {
  const Eigen::Map<const Eigen::VectorXd> c(curve.values.data(), static_cast<Eigen::Index>(curve.size()));
  SignalGrads g;
  g.b2 = d_out;
  g.w2 = d_out * f.hidden.transpose();
  const Eigen::VectorXd d_hidden = mlp.w2.transpose() * d_out;
  g.b1 = d_hidden.array() * (1.0 - f.hidden.array().square());
  g.w1 = g.b1 * c.transpose();
  return g;
}

Latent inject_signal(const Latent& z, const VecRef& tau) {
  if (tau.size() != z.width) throw std::invalid_argument("signal width mismatch");
  Latent out = z;
  for (int ch = 0; ch < z.channels; ++ch) {
    for (int r = 0; r < z.height; ++r) {
      for (int c = 0; c < z.width; ++c) out.at(r, c, ch) += tau[c];
    }
  }
  return out;
}

Eigen::VectorXd inject_signal_backward(const Latent& d_z) {
  Eigen::VectorXd d_tau = Eigen::VectorXd::Zero(d_z.width);
  for (int ch = 0; ch < d_z.channels; ++ch) {
    for (int r = 0; r < d_z.height; ++r) {
      for (int c = 0; c < d_z.width; ++c) d_tau[c] += d_z.at(r, c, ch);
    }
  }
  return d_tau;
}

Eigen::RowVectorXd encode_text(int tag, const MatRef& table) {
  if (tag < 0 || tag >= table.rows()) throw std::invalid_argument("unknown tag");
  return table.row(tag);
}

Eigen::RowVectorXd null_condition(Slot slot, const NullTokens& tokens) {
  return slot == Slot::kText ? tokens.text.transpose() : tokens.visual.transpose();
}

}  // namespace foley::cond
