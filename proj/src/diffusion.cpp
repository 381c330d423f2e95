#include "foley/diffusion.hpp"

#include <cmath>
#include <stdexcept>

namespace foley::diffusion {

NoiseSchedule NoiseSchedule::linear(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw std::invalid_argument("invalid step count");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) throw std::invalid_argument("invalid beta range");
  if (steps > 1 && beta_start == beta_end) throw std::invalid_argument("invalid beta range");
  std::vector<double> betas(static_cast<std::size_t>(steps));
  for (int t = 1; t <= steps; ++t) {
    betas[t - 1] = steps == 1 ? beta_start : beta_start + (t - 1.0) / (steps - 1.0) * (beta_end - beta_start);
  }
  return from_betas(std::move(betas));
}

NoiseSchedule NoiseSchedule::from_betas(std::vector<double> betas) {
  if (betas.empty()) throw std::invalid_argument("invalid step count");
  NoiseSchedule s;
  double cum = 1.0;
  for (double b : betas) {
    if (!(b > 0.0 && b < 1.0)) throw std::invalid_argument("invalid beta range");
    cum *= 1.0 - b;
    s.alpha_cum_.push_back(cum);
  }
  s.betas_ = std::move(betas);
  return s;
}

namespace {

void check_step(int t, const NoiseSchedule& sched) {
  if (t < 1 || t > sched.steps()) throw std::invalid_argument("invalid step");
}

}  // namespace

Latent standard_normal_like(const Latent& shape, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Latent out(shape.height, shape.width, shape.channels);
  for (Eigen::Index i = 0; i < out.size(); ++i) out.values[i] = normal(rng);
  return out;
}

Latent q_sample(const Latent& z0, int t, const Latent& eps, const NoiseSchedule& sched) {
  check_step(t, sched);
  require_same_shape(z0, eps);
  const double abar = sched.alpha_cum(t);
  Latent out = z0;
  out.values = std::sqrt(abar) * z0.values + std::sqrt(1.0 - abar) * eps.values;
  return out;
}

Latent ddpm_step(const Latent& zt, int t, const Latent& eps_hat, const NoiseSchedule& sched, const Latent& noise) {
  check_step(t, sched);
  require_same_shape(zt, eps_hat);
  const double beta = sched.beta(t);
  const double abar = sched.alpha_cum(t);
  Latent out = zt;
  out.values = (zt.values - (beta / std::sqrt(1.0 - abar)) * eps_hat.values) / std::sqrt(sched.alpha(t));
  if (t > 1) {
    require_same_shape(zt, noise);
    const double var = (1.0 - sched.alpha_cum(t - 1)) / (1.0 - abar) * beta;
    out.values += std::sqrt(var) * noise.values;
  }
  return out;
}

Latent ddim_step(const Latent& zt, int t, int t_prev, const Latent& eps_hat, const NoiseSchedule& sched) {
  check_step(t, sched);
  if (t_prev >= t) throw std::invalid_argument("non-decreasing step");
  if (t_prev < 0) throw std::invalid_argument("invalid step");
  require_same_shape(zt, eps_hat);
  const double abar = sched.alpha_cum(t);
  const double abar_prev = sched.alpha_cum(t_prev);
  Latent out = zt;
  const Eigen::ArrayXd z0_hat = (zt.values - std::sqrt(1.0 - abar) * eps_hat.values) / std::sqrt(abar);
  out.values = std::sqrt(abar_prev) * z0_hat + std::sqrt(1.0 - abar_prev) * eps_hat.values;
  return out;
}

Latent dual_cfg(const Latent& eps_uncond, const Latent& eps_text, const Latent& eps_full, const GuidanceScales& s) {
  require_same_shape(eps_uncond, eps_text);
  require_same_shape(eps_uncond, eps_full);
  // Weighted-sum form of u + s_t (t - u) + s_v (f - u); collapses exactly to u, t or f at unit scales.
  Latent out = eps_uncond;
  out.values = (1.0 - s.text - s.video) * eps_uncond.values + s.text * eps_text.values + s.video * eps_full.values;
  return out;
}

std::vector<int> timestep_subset(int total, int steps) {
  if (steps < 1) throw std::invalid_argument("invalid step count");
  if (steps > total) throw std::invalid_argument("too many steps");
  std::vector<int> ts;
  for (int k = steps; k >= 1; --k) {
    ts.push_back(static_cast<int>((static_cast<long long>(k) * total + steps / 2) / steps));
  }
  return ts;
}

Latent sample(const EpsPredictor& model, const cond::ConditionSet& cond, const NoiseSchedule& sched, int height,
              int width, const SampleOptions& opts) {
  if (opts.steps > sched.steps()) throw std::invalid_argument("too many steps");
  const auto ts = timestep_subset(sched.steps(), opts.steps);

  cond::ConditionSet uncond = cond;
  uncond.text.reset();
  uncond.visual.reset();
  cond::ConditionSet text_only = cond;
  text_only.visual.reset();

  std::mt19937_64 rng(opts.seed);
  Latent z = standard_normal_like(Latent(height, width), rng);

  auto guided = [&](int t) {
    const Latent e_uncond = model(z, t, uncond);
    const Latent e_text = cond.text ? model(z, t, text_only) : e_uncond;
    const Latent e_full = cond.visual ? model(z, t, cond) : e_text;
    return dual_cfg(e_uncond, e_text, e_full, opts.scales);
  };

  if (opts.sampler == Sampler::kDdim) {
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const int t_prev = i + 1 < ts.size() ? ts[i + 1] : 0;
      z = ddim_step(z, ts[i], t_prev, guided(ts[i]), sched);
    }
    return z;
  }

  // Ancestral sampling on the respaced schedule: beta_k = 1 - abar(t_k) / abar(t_{k-1}).
  std::vector<double> betas(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const int t = ts[ts.size() - 1 - i];
    const int t_prev = i == 0 ? 0 : ts[ts.size() - i];
    betas[i] = 1.0 - sched.alpha_cum(t) / sched.alpha_cum(t_prev);
  }
  const NoiseSchedule respaced = NoiseSchedule::from_betas(betas);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const int k = static_cast<int>(ts.size() - i);
    const Latent eps_hat = guided(ts[i]);
    const Latent noise = standard_normal_like(z, rng);
    z = ddpm_step(z, k, eps_hat, respaced, noise);
  }
  return z;
}

}  // namespace foley::diffusion
