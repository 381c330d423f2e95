#pragma once

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "foley/dataset.hpp"
#include "foley/denoiser.hpp"
#include "foley/diffusion.hpp"

namespace foley::train {

/// A training pair in latent space.
struct TrainItem {
  Latent z0;
  cond::ConditionSet cond;
};

std::vector<TrainItem> make_items(const data::Dataset& ds, const cond::VisualGrid& grid);

/// Per-item randomness of one loss evaluation: timestep, noise and condition dropout.
struct ItemDraw {
  int t = 1;
  Latent eps;
  bool drop_text = false;
  bool drop_visual = false;
  bool drop_signal = false;
};

ItemDraw draw_item(std::mt19937_64& rng, const Latent& shape, int steps, double dropout);

cond::ConditionSet apply_dropout(const cond::ConditionSet& c, const ItemDraw& d);

/// Mean over items and cells of ||eps - eps_hat(z_t, t, cond)||^2. Accumulates
/// the gradient into `grads` when given.
double batch_loss(const nn::DenoiserParams& params, const std::vector<const TrainItem*>& batch,
                  const std::vector<ItemDraw>& draws, const diffusion::NoiseSchedule& sched,
                  nn::ParamGrads* grads = nullptr);

/// Same objective for an arbitrary predictor (no gradients).
double batch_loss(const diffusion::EpsPredictor& model, const std::vector<const TrainItem*>& batch,
                  const std::vector<ItemDraw>& draws, const diffusion::NoiseSchedule& sched);

/// Draws per-item randomness from rng, then evaluates batch_loss.
double loss(const nn::DenoiserParams& params, const std::vector<const TrainItem*>& batch,
            const diffusion::NoiseSchedule& sched, std::mt19937_64& rng, double dropout);

/// Decoupled weight decay Adam.
class AdamW {
 public:
  AdamW(std::size_t size, const TrainConfig& cfg);
  void step(std::vector<double>& params, const std::vector<double>& grads);

 private:
  TrainConfig cfg_;
  std::vector<double> m_, v_;
  long long t_ = 0;
};

struct TrainResult {
  nn::DenoiserParams params;
  std::vector<double> losses;  // one per step
};

using ProgressFn = std::function<void(int step, double loss)>;

/// Seeded, single-threaded: same dataset + config -> identical parameters.
/// Throws std::runtime_error("training diverged") on a non-finite loss.
TrainResult train(const data::Dataset& ds, const FoleyConfig& cfg, const ProgressFn& progress = {});

/// Continues training from existing parameters.
TrainResult train_from(nn::DenoiserParams params, const data::Dataset& ds, const FoleyConfig& cfg,
                       const ProgressFn& progress = {});

diffusion::NoiseSchedule schedule_for(const FoleyConfig& cfg);

struct GradCheckEntry {
  std::string tensor;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
  std::vector<std::string> groups_checked;
};

struct GradCheckOptions {
  double step = 1e-3;
  int coords_per_tensor = 2;
  std::uint64_t seed = 0;
  // Multiplies this tensor's analytic gradient by 2 (fault injection).
  std::optional<std::string> corrupt_tensor;
};

/// Central differences against the analytic gradient on random coordinates of every tensor.
GradCheckReport grad_check(const nn::DenoiserParams& params, const std::vector<const TrainItem*>& batch,
                           const std::vector<ItemDraw>& draws, const diffusion::NoiseSchedule& sched,
                           const GradCheckOptions& opts);

}  // namespace foley::train
