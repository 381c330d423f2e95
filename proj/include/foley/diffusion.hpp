#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "foley/conditioning.hpp"
#include "foley/latent.hpp"

namespace foley::diffusion {

/// Linear beta schedule. Steps are 1-based; alpha_cum(0) is defined as 1.
class NoiseSchedule {
 public:
  static NoiseSchedule linear(int steps, double beta_start, double beta_end);
  // Schedule from explicit betas (used for respaced ancestral sampling).
  static NoiseSchedule from_betas(std::vector<double> betas);

  int steps() const { return static_cast<int>(betas_.size()); }
  double beta(int t) const { return betas_.at(t - 1); }
  double alpha(int t) const { return 1.0 - beta(t); }
  double alpha_cum(int t) const { return t == 0 ? 1.0 : alpha_cum_.at(t - 1); }
  const std::vector<double>& betas() const { return betas_; }

 private:
  std::vector<double> betas_;
  std::vector<double> alpha_cum_;
};

inline NoiseSchedule make_schedule(int steps, double beta_start, double beta_end) {
  return NoiseSchedule::linear(steps, beta_start, beta_end);
}

struct GuidanceScales {
  double text = 3.5;
  double video = 4.5;
};

enum class Sampler { kDdpm, kDdim };

Latent standard_normal_like(const Latent& shape, std::mt19937_64& rng);

/// sqrt(abar_t) z0 + sqrt(1 - abar_t) eps.
Latent q_sample(const Latent& z0, int t, const Latent& eps, const NoiseSchedule& sched);

/// Ancestral step. `noise` is ignored at t = 1.
Latent ddpm_step(const Latent& zt, int t, const Latent& eps_hat, const NoiseSchedule& sched, const Latent& noise);

/// Deterministic (eta = 0) step from t to t_prev < t.
Latent ddim_step(const Latent& zt, int t, int t_prev, const Latent& eps_hat, const NoiseSchedule& sched);

/// eps_uncond + s_text (eps_text - eps_uncond) + s_video (eps_full - eps_uncond).
Latent dual_cfg(const Latent& eps_uncond, const Latent& eps_text, const Latent& eps_full, const GuidanceScales& scales);

/// Evenly spaced decreasing timesteps T = t_n > ... > t_1 >= 1.
std::vector<int> timestep_subset(int total, int steps);

using EpsPredictor = std::function<Latent(const Latent& zt, int t, const cond::ConditionSet& cond)>;

struct SampleOptions {
  int steps = 25;
  GuidanceScales scales;
  Sampler sampler = Sampler::kDdim;
  std::uint64_t seed = 0;
};

/// Reverse diffusion from z_T ~ N(0, I). Every step evaluates the predictor on
/// (null, null), (text, null) and (text, visual) and combines them with dual_cfg;
/// the loudness signal is passed through unchanged in all three.
Latent sample(const EpsPredictor& model, const cond::ConditionSet& cond, const NoiseSchedule& sched,
              int height, int width, const SampleOptions& opts);

}  // namespace foley::diffusion
