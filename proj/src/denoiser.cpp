#include "foley/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "foley/diffusion.hpp"
#include "foley/nn_ops.hpp"

namespace foley::nn {

void TensorLayout::add(const std::string& name, int rows, int cols) {
  specs_.push_back({name, rows, cols, total_});
  total_ += specs_.back().size();
}

const TensorSpec& TensorLayout::spec(const std::string& name) const {
  for (const auto& s : specs_) {
    if (s.name == name) return s;
  }
  throw std::out_of_range("unknown tensor " + name);
}

Topology Topology::from_config(const FoleyConfig& cfg) {
  Topology t;
  t.latent_height = cfg.latent_height();
  t.latent_width = cfg.latent_width();
  t.curve_length = cfg.curve_length();
  t.classes = cfg.synth.classes();
  t.context_channels = cfg.grid.channels;
  t.visual_frames = cfg.grid.frames;
  t.model = cfg.model;
  t.diffusion = cfg.diffusion;
  return t;
}

TensorLayout make_layout(const Topology& topo) {
  const auto& m = topo.model;
  if (m.attention_dim != m.channels_high) throw std::invalid_argument("attention_dim must equal channels_high");
  const int lo = m.channels_low, hi = m.channels_high, emb = m.time_embedding_dim, ctx = topo.context_channels;
  if (topo.latent_width % 4 != 0) throw std::invalid_argument("latent width must be divisible by 4");
  const int bins = topo.latent_height;
  TensorLayout l;
  auto conv = [&](const std::string& name, int out, int in) {
    l.add("conv." + name + ".w", out, in * 3);
    l.add("conv." + name + ".b", out, 1);
  };
  auto temb = [&](const std::string& name, int out) {
    l.add("temb." + name + ".w", out, emb);
    l.add("temb." + name + ".b", out, 1);
  };
  conv("d1", lo, bins);
  conv("d2", hi, lo);
  conv("mid", hi, hi);
  conv("mid2", hi, hi);
  conv("u2", hi, hi);
  conv("u1", lo, hi);
  conv("out", bins, lo);
  temb("d1", lo);
  temb("d2", hi);
  temb("mid", hi);
  temb("u2", hi);
  temb("u1", lo);
  l.add("attn.q", hi, m.attention_dim);
  l.add("attn.k", ctx, m.attention_dim);
  l.add("attn.v", ctx, m.attention_dim);
  l.add("fusion.w", ctx, ctx);
  l.add("signal.w1", m.signal_hidden, topo.curve_length);
  l.add("signal.b1", m.signal_hidden, 1);
  l.add("signal.w2", topo.latent_width, m.signal_hidden);
  l.add("signal.b2", topo.latent_width, 1);
  l.add("text.table", topo.classes, ctx);
  l.add("null.text", ctx, 1);
  l.add("null.visual", ctx, 1);
  l.add("skip.gain", 1, 1);
  return l;
}

Eigen::Map<const RowMatrix> DenoiserParams::mat(const std::string& name) const {
  const auto& s = layout.spec(name);
  return {values.data() + s.offset, s.rows, s.cols};
}

Eigen::Map<RowMatrix> DenoiserParams::mat(const std::string& name) {
  const auto& s = layout.spec(name);
  return {values.data() + s.offset, s.rows, s.cols};
}

Eigen::Map<const Eigen::VectorXd> DenoiserParams::vec(const std::string& name) const {
  const auto& s = layout.spec(name);
  return {values.data() + s.offset, static_cast<Eigen::Index>(s.size())};
}

Eigen::Map<RowMatrix> ParamGrads::mat(const std::string& name) {
  const auto& s = layout->spec(name);
  return {values.data() + s.offset, s.rows, s.cols};
}

Eigen::Map<Eigen::VectorXd> ParamGrads::vec(const std::string& name) {
  const auto& s = layout->spec(name);
  return {values.data() + s.offset, static_cast<Eigen::Index>(s.size())};
}

DenoiserParams zero_params(const Topology& topo) {
  DenoiserParams p;
  p.topo = topo;
  p.layout = make_layout(topo);
  p.values.assign(p.layout.total(), 0.0);
  return p;
}

namespace {
constexpr double kSignalGain = 4.0;   // tanh(4 c) stays informative over typical RMS levels
constexpr double kSignalScale = 0.5;
}  // namespace

DenoiserParams init_params(const Topology& topo, std::uint64_t seed) {
  DenoiserParams p = zero_params(topo);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto fill = [&](const std::string& name, double stddev) {
    auto m = p.mat(name);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = stddev * normal(rng);
  };
  for (const auto& s : p.layout.specs()) {
    const std::string& n = s.name;
    if (n.starts_with("conv.") && n.ends_with(".w")) {
      fill(n, std::sqrt((n == "conv.out.w" ? 1.0 : 2.0) / s.cols));
    } else if (n.starts_with("temb.") && n.ends_with(".w")) {
      fill(n, 1.0 / std::sqrt(static_cast<double>(s.cols)));
    } else if (n.starts_with("attn.")) {
      fill(n, 1.0 / std::sqrt(static_cast<double>(s.rows)));
    } else if (n == "fusion.w") {
      fill(n, 0.1 / std::sqrt(static_cast<double>(s.rows)));
      p.mat(n).diagonal().array() += topo.model.fusion_init_scale;
    } else if (n == "signal.w1") {
      fill(n, 0.1 / std::sqrt(static_cast<double>(s.cols)));
      // Starts near linear resampling of the curve onto the hidden units (one per frame when sizes agree).
      auto w1 = p.mat(n);
      for (Eigen::Index j = 0; j < w1.rows(); ++j) {
        const double pos = std::clamp((j + 0.5) * s.cols / w1.rows() - 0.5, 0.0, s.cols - 1.0);
        const auto lo = static_cast<Eigen::Index>(pos);
        const auto hi = std::min<Eigen::Index>(lo + 1, s.cols - 1);
        w1(j, lo) += kSignalGain * (1.0 - (pos - lo));
        w1(j, hi) += kSignalGain * (pos - lo);
      }
    } else if (n == "signal.w2") {
      fill(n, 0.1 / std::sqrt(static_cast<double>(s.cols)));
      if (s.rows == s.cols) p.mat(n).diagonal().array() += kSignalScale;
    } else if (n == "text.table" || n.starts_with("null.")) {
      fill(n, 1.0);
    } else if (n == "skip.gain") {
      p.mat(n)(0, 0) = 1.0;
    }
  }
  return p;
}

struct ForwardCache {
  Latent input;  // after signal injection
  bool has_signal = false;
  cond::SignalForward signal;
  Eigen::VectorXd temb;
  ConvForward c_d1, c_d2, c_mid, c_mid2, c_u2, c_u1, c_out;
  RowMatrix pre_d1, d1, p1, pre_d2, d2, p2, pre_mid, mid, mid_attn, pre_mid2, mid2, skip2, pre_u2, u2, up_u2,
      pre_u1, u1, skip1;
  RowMatrix context;
  RowMatrix queries;
  double out_scale = 1.0;
  double skip_scale = 0.0;
  Eigen::ArrayXd zt;
  cond::AttentionForward attn;
};

DenoiseTrace::DenoiseTrace() : cache_(std::make_unique<ForwardCache>()) {}
DenoiseTrace::~DenoiseTrace() = default;
DenoiseTrace::DenoiseTrace(DenoiseTrace&&) noexcept = default;
DenoiseTrace& DenoiseTrace::operator=(DenoiseTrace&&) noexcept = default;

namespace {

cond::AttentionWeights attention_weights(const DenoiserParams& p) {
  return {p.mat("attn.q"), p.mat("attn.k"), p.mat("attn.v")};
}

cond::SignalMlp signal_mlp(const DenoiserParams& p) {
  return {p.mat("signal.w1"), p.vec("signal.b1"), p.mat("signal.w2"), p.vec("signal.b2")};
}

// Text token followed by one token per visual frame.
RowMatrix build_context(const cond::ConditionSet& c, const DenoiserParams& p) {
  const int frames = p.topo.visual_frames;
  const int ctx = p.topo.context_channels;
  RowMatrix context(frames + 1, ctx);
  const cond::NullTokens nulls{p.vec("null.text"), p.vec("null.visual")};
  context.row(0) = c.text ? cond::encode_text(*c.text, p.mat("text.table")) : cond::null_condition(cond::Slot::kText, nulls);
  if (c.visual) {
    if (c.visual->full.rows() != frames || c.visual->full.cols() != ctx) throw std::invalid_argument("visual feature shape mismatch");
    context.bottomRows(frames) = cond::mask_fuse(c.visual->full, c.visual->masked, p.mat("fusion.w"));
  } else {
    context.bottomRows(frames).rowwise() = cond::null_condition(cond::Slot::kVisual, nulls);
  }
  return context;
}

// conv -> + timestep affine -> SiLU
void block(const RowMatrix& x, const DenoiserParams& p, const std::string& name, const Eigen::VectorXd& temb,
           ConvForward& conv, RowMatrix& pre, RowMatrix& out) {
  conv = conv3(x, p.mat("conv." + name + ".w"), p.vec("conv." + name + ".b"));
  const Eigen::VectorXd shift = p.mat("temb." + name + ".w") * temb + p.vec("temb." + name + ".b");
  pre = conv.out;
  pre.colwise() += shift;
  out = silu(pre);
}

RowMatrix block_backward(const ConvForward& conv, const RowMatrix& pre, const RowMatrix& d_out, int c_in,
                         const DenoiserParams& p, const std::string& name, const Eigen::VectorXd& temb,
                         ParamGrads& g) {
  const RowMatrix d_pre = silu_backward(pre, d_out);
  const Eigen::VectorXd d_shift = d_pre.rowwise().sum();
  g.mat("temb." + name + ".w") += d_shift * temb.transpose();
  g.vec("temb." + name + ".b") += d_shift;
  auto cg = conv3_backward(conv, c_in, p.mat("conv." + name + ".w"), d_pre);
  g.mat("conv." + name + ".w") += cg.weight;
  g.vec("conv." + name + ".b") += cg.bias;
  return std::move(cg.input);
}

}  // namespace

Latent denoise(const Latent& zt, int t, const cond::ConditionSet& c, const DenoiserParams& p, DenoiseTrace* trace) {
  const auto& topo = p.topo;
  if (zt.height != topo.latent_height || zt.width != topo.latent_width || zt.channels != 1) {
    throw std::invalid_argument("latent shape mismatch");
  }
  DenoiseTrace local;
  ForwardCache& f = trace ? trace->cache() : local.cache();
  const int h = topo.latent_height, w = topo.latent_width;

  f.has_signal = c.signal.has_value();
  if (f.has_signal) {
    f.signal = cond::encode_signal(*c.signal, signal_mlp(p));
    f.input = cond::inject_signal(zt, f.signal.out);
  } else {
    f.input = zt;
  }
  f.temb = timestep_embedding(t, topo.model.time_embedding_dim);

  const Eigen::Map<const RowMatrix> x(f.input.values.data(), h, w);
  block(x, p, "d1", f.temb, f.c_d1, f.pre_d1, f.d1);
  f.p1 = avg_pool2(f.d1);
  block(f.p1, p, "d2", f.temb, f.c_d2, f.pre_d2, f.d2);
  f.p2 = avg_pool2(f.d2);
  block(f.p2, p, "mid", f.temb, f.c_mid, f.pre_mid, f.mid);

  f.context = build_context(c, p);
  f.queries = f.mid.transpose();
  f.attn = cond::cross_attention(f.queries, f.context, attention_weights(p));
  f.mid_attn = f.mid + f.attn.out.transpose();

  f.c_mid2 = conv3(f.mid_attn, p.mat("conv.mid2.w"), p.vec("conv.mid2.b"));
  f.pre_mid2 = f.c_mid2.out;
  f.mid2 = silu(f.pre_mid2);

  f.skip2 = upsample2(f.mid2) + f.d2;
  block(f.skip2, p, "u2", f.temb, f.c_u2, f.pre_u2, f.u2);
  f.up_u2 = upsample2(f.u2);
  block(f.up_u2, p, "u1", f.temb, f.c_u1, f.pre_u1, f.u1);
  f.skip1 = f.u1 + f.d1;
  f.c_out = conv3(f.skip1, p.mat("conv.out.w"), p.vec("conv.out.b"));

  const auto& d = topo.diffusion;
  const double abar = diffusion::make_schedule(d.steps, d.beta_start, d.beta_end).alpha_cum(t);
  f.out_scale = std::sqrt(abar);
  f.skip_scale = std::sqrt(1.0 - abar);
  f.zt = zt.values;
  Latent out(h, w, 1);
  out.values = f.out_scale * Eigen::Map<const Eigen::ArrayXd>(f.c_out.out.data(), f.c_out.out.size()) +
               p.mat("skip.gain")(0, 0) * f.skip_scale * zt.values;
  return out;
}

void denoise_backward(const DenoiseTrace& trace, const Latent& d_out, const cond::ConditionSet& c,
                      const DenoiserParams& p, ParamGrads& g) {
  const ForwardCache& f = trace.cache();
  const auto& topo = p.topo;
  const int h = topo.latent_height, w = topo.latent_width;
  const int lo = topo.model.channels_low, hi = topo.model.channels_high;

  g.mat("skip.gain")(0, 0) += f.skip_scale * (d_out.values * f.zt).sum();
  const RowMatrix d_y = f.out_scale * Eigen::Map<const RowMatrix>(d_out.values.data(), h, w);
  auto cg = conv3_backward(f.c_out, lo, p.mat("conv.out.w"), d_y);
  g.mat("conv.out.w") += cg.weight;
  g.vec("conv.out.b") += cg.bias;
  const RowMatrix& d_skip1 = cg.input;

  const RowMatrix d_up_u2 = block_backward(f.c_u1, f.pre_u1, d_skip1, hi, p, "u1", f.temb, g);
  const RowMatrix d_u2 = upsample2_backward(d_up_u2);
  const RowMatrix d_skip2 = block_backward(f.c_u2, f.pre_u2, d_u2, hi, p, "u2", f.temb, g);

  const RowMatrix d_mid2 = upsample2_backward(d_skip2);
  const RowMatrix d_pre_mid2 = silu_backward(f.pre_mid2, d_mid2);
  auto cg2 = conv3_backward(f.c_mid2, hi, p.mat("conv.mid2.w"), d_pre_mid2);
  g.mat("conv.mid2.w") += cg2.weight;
  g.vec("conv.mid2.b") += cg2.bias;
  RowMatrix d_mid = cg2.input;

  const RowMatrix d_attn_out = d_mid.transpose();
  const auto ag = cond::cross_attention_backward(f.queries, f.context, attention_weights(p), f.attn, d_attn_out);
  g.mat("attn.q") += ag.wq;
  g.mat("attn.k") += ag.wk;
  g.mat("attn.v") += ag.wv;
  d_mid += ag.queries.transpose();

  const int frames = topo.visual_frames;
  if (c.text) {
    g.mat("text.table").row(*c.text) += ag.context.row(0);
  } else {
    g.vec("null.text") += ag.context.row(0).transpose();
  }
  if (c.visual) {
    const RowMatrix d_visual = ag.context.bottomRows(frames);
    const auto fg = cond::mask_fuse_backward(c.visual->masked, p.mat("fusion.w"), d_visual);
    g.mat("fusion.w") += fg.weight;
  } else {
    g.vec("null.visual") += ag.context.bottomRows(frames).colwise().sum().transpose();
  }

  const RowMatrix d_p2 = block_backward(f.c_mid, f.pre_mid, d_mid, hi, p, "mid", f.temb, g);
  const RowMatrix d_d2 = avg_pool2_backward(d_p2) + d_skip2;
  const RowMatrix d_p1 = block_backward(f.c_d2, f.pre_d2, d_d2, lo, p, "d2", f.temb, g);
  const RowMatrix d_d1 = avg_pool2_backward(d_p1) + d_skip1;
  const RowMatrix d_x = block_backward(f.c_d1, f.pre_d1, d_d1, h, p, "d1", f.temb, g);

  if (f.has_signal) {
    Latent d_in(h, w, 1);
    d_in.values = Eigen::Map<const Eigen::ArrayXd>(d_x.data(), d_x.size());
    const Eigen::VectorXd d_tau = cond::inject_signal_backward(d_in);
    const auto sg = cond::encode_signal_backward(*c.signal, signal_mlp(p), f.signal, d_tau);
    g.mat("signal.w1") += sg.w1;
    g.vec("signal.b1") += sg.b1;
    g.mat("signal.w2") += sg.w2;
    g.vec("signal.b2") += sg.b2;
  }
}

}  // namespace foley::nn
