#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "foley/latent.hpp"
#include "foley/loudness.hpp"
#include "foley/script.hpp"

namespace foley::cond {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatRef = Eigen::Ref<const RowMatrix>;
using VecRef = Eigen::Ref<const Eigen::VectorXd>;

/// Frame grid shared by masks and toy visual features.
struct VisualGrid {
  int frames = 8;
  int height = 16;
  int width = 16;
  double fps = 4.0;
  int channels = 32;
};

/// T_f binary masks of H x W cells, row-major per frame.
class MaskTrack {
 public:
  MaskTrack() = default;
  MaskTrack(int frames, int height, int width, std::uint8_t fill = 1);

  int frames() const { return frames_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::uint8_t at(int t, int r, int c) const { return cells_[index(t, r, c)]; }
  void set(int t, int r, int c, std::uint8_t v) { cells_[index(t, r, c)] = v ? 1 : 0; }
  void fill_region(int t, const synth::Region& region, std::uint8_t v);
  bool operator==(const MaskTrack&) const = default;

 private:
  std::size_t index(int t, int r, int c) const {
    return (static_cast<std::size_t>(t) * height_ + r) * width_ + c;
  }
  int frames_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> cells_;
};

/// Frame t spans [t / fps, (t + 1) / fps).
bool event_active(const synth::Event& e, int frame, double fps);

/// Per-frame token: sum over active events of one-hot(class) * gain * overlap,
/// plus sin(t / T_f) in the last channel. A null mask means full overlap.
RowMatrix toy_visual_features(const synth::EventScript& script, const MaskTrack* mask, const VisualGrid& grid);

/// Full and masked video features; fused inside the denoiser.
struct VisualCondition {
  RowMatrix full;
  RowMatrix masked;
};

VisualCondition make_visual_condition(const synth::EventScript& script, const MaskTrack* mask, const VisualGrid& grid);

/// Instruction triple. An empty slot is the null condition.
struct ConditionSet {
  std::optional<int> text;
  std::optional<VisualCondition> visual;
  std::optional<loudness::LoudnessCurve> signal;
};

// ---- Mask-attention fusion --------------------------------------------------

/// tau = F_mask * broadcast(GAP(F_mask) W) + F_visual, GAP over frames.
RowMatrix mask_fuse(const MatRef& visual, const MatRef& masked, const MatRef& weight);

struct MaskFuseGrads {
  RowMatrix visual;
  RowMatrix masked;
  RowMatrix weight;
};
MaskFuseGrads mask_fuse_backward(const MatRef& masked, const MatRef& weight, const MatRef& d_out);

// ---- Cross-attention ----------------------------------------------------------

struct AttentionWeights {
  MatRef query;  // d_model x d
  MatRef key;    // C x d
  MatRef value;  // C x d
};

struct AttentionForward {
  RowMatrix q, k, v;
  RowMatrix probs;  // L_q x L_k, rows sum to 1
  RowMatrix out;    // L_q x d
};

/// Single-head softmax(Q K^T / sqrt(d)) V with Q = X Wq, K = ctx Wk, V = ctx Wv.
AttentionForward cross_attention(const MatRef& queries, const MatRef& context, const AttentionWeights& w);

struct AttentionGrads {
  RowMatrix queries, context, wq, wk, wv;
};
AttentionGrads cross_attention_backward(const MatRef& queries, const MatRef& context, const AttentionWeights& w,
                                        const AttentionForward& fwd, const MatRef& d_out);

// ---- Loudness-signal encoder --------------------------------------------------

struct SignalMlp {
  MatRef w1;  // hidden x curve_len
  VecRef b1;
  MatRef w2;  // width x hidden
  VecRef b2;
};

struct SignalForward {
  Eigen::VectorXd hidden;  // tanh activations
  Eigen::VectorXd out;
};

/// curve -> tanh(W1 c + b1) -> W2 h + b2, a 1 x w x 1 embedding.
SignalForward encode_signal(const loudness::LoudnessCurve& curve, const SignalMlp& mlp);

struct SignalGrads {
  RowMatrix w1, w2;
  Eigen::VectorXd b1, b2;
};
SignalGrads encode_signal_backward(const loudness::LoudnessCurve& curve, const SignalMlp& mlp,
                                   const SignalForward& fwd, const VecRef& d_out);

/// z(h, w, c) + tau(w), broadcast over h and c.
Latent inject_signal(const Latent& z, const VecRef& tau);

/// Sum of d_z over h and c for each column.
Eigen::VectorXd inject_signal_backward(const Latent& d_z);

// ---- Text and null tokens ---------------------------------------------------

Eigen::RowVectorXd encode_text(int tag, const MatRef& table);

enum class Slot { kText, kVisual };

struct NullTokens {
  VecRef text;
  VecRef visual;
};

Eigen::RowVectorXd null_condition(Slot slot, const NullTokens& tokens);

}  // namespace foley::cond
