#include "foley/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace foley::train {

std::vector<TrainItem> make_items(const data::Dataset& ds, const cond::VisualGrid& grid) {
  std::vector<TrainItem> items;
  items.reserve(ds.examples.size());
  for (const auto& ex : ds.examples) items.push_back({data::to_latent(ex.spec, ds.stats), synth::conditions_for(ex, grid)});
  return items;
}

ItemDraw draw_item(std::mt19937_64& rng, const Latent& shape, int steps, double dropout) {
  ItemDraw d;
  d.t = std::uniform_int_distribution<int>(1, steps)(rng);
  d.eps = diffusion::standard_normal_like(shape, rng);
  std::bernoulli_distribution drop(dropout);
  d.drop_text = drop(rng);
  d.drop_visual = drop(rng);
  d.drop_signal = drop(rng);
  return d;
}

cond::ConditionSet apply_dropout(const cond::ConditionSet& c, const ItemDraw& d) {
  cond::ConditionSet out = c;
  if (d.drop_text) out.text.reset();
  if (d.drop_visual) out.visual.reset();
  if (d.drop_signal) out.signal.reset();
  return out;
}

double batch_loss(const nn::DenoiserParams& params, const std::vector<const TrainItem*>& batch,
                  const std::vector<ItemDraw>& draws, const diffusion::NoiseSchedule& sched, nn::ParamGrads* grads) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  if (draws.size() != batch.size()) throw std::invalid_argument("draw count mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& item = *batch[i];
    const auto& d = draws[i];
    const Latent zt = diffusion::q_sample(item.z0, d.t, d.eps, sched);
    const auto c = apply_dropout(item.cond, d);
    nn::DenoiseTrace trace;
    const Latent eps_hat = nn::denoise(zt, d.t, c, params, grads ? &trace : nullptr);
    const Eigen::ArrayXd diff = eps_hat.values - d.eps.values;
    const double cells = static_cast<double>(diff.size());
    total += diff.square().sum() / cells;
    if (grads) {
      Latent d_out = eps_hat;
      d_out.values = diff * (2.0 / (cells * static_cast<double>(batch.size())));
      nn::denoise_backward(trace, d_out, c, params, *grads);
    }
  }
  return total / static_cast<double>(batch.size());
}

double batch_loss(const diffusion::EpsPredictor& model, const std::vector<const TrainItem*>& batch,
                  const std::vector<ItemDraw>& draws, const diffusion::NoiseSchedule& sched) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  if (draws.size() != batch.size()) throw std::invalid_argument("draw count mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& d = draws[i];
    const Latent zt = diffusion::q_sample(batch[i]->z0, d.t, d.eps, sched);
    const Latent eps_hat = model(zt, d.t, apply_dropout(batch[i]->cond, d));
    require_same_shape(eps_hat, d.eps);
    total += (eps_hat.values - d.eps.values).square().mean();
  }
  return total / static_cast<double>(batch.size());
}

double loss(const nn::DenoiserParams& params, const std::vector<const TrainItem*>& batch,
            const diffusion::NoiseSchedule& sched, std::mt19937_64& rng, double dropout) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  std::vector<ItemDraw> draws;
  for (const auto* item : batch) draws.push_back(draw_item(rng, item->z0, sched.steps(), dropout));
  return batch_loss(params, batch, draws, sched);
}

AdamW::AdamW(std::size_t size, const TrainConfig& cfg) : cfg_(cfg), m_(size, 0.0), v_(size, 0.0) {}

void AdamW::step(std::vector<double>& params, const std::vector<double>& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grads[i];
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grads[i] * grads[i];
    const double update = (m_[i] / c1) / (std::sqrt(v_[i] / c2) + cfg_.adam_epsilon);
    params[i] -= cfg_.learning_rate * (update + cfg_.weight_decay * params[i]);
  }
}

diffusion::NoiseSchedule schedule_for(const FoleyConfig& cfg) {
  return diffusion::make_schedule(cfg.diffusion.steps, cfg.diffusion.beta_start, cfg.diffusion.beta_end);
}

TrainResult train(const data::Dataset& ds, const FoleyConfig& cfg, const ProgressFn& progress) {
  const auto topo = nn::Topology::from_config(cfg);
  return train_from(nn::init_params(topo, cfg.train.seed), ds, cfg, progress);
}

TrainResult train_from(nn::DenoiserParams params, const data::Dataset& ds, const FoleyConfig& cfg,
                       const ProgressFn& progress) {
  const auto& tc = cfg.train;
  if (!(tc.learning_rate >= 0)) throw std::invalid_argument("invalid learning rate");
  if (tc.batch_size < 1) throw std::invalid_argument("invalid batch size");
  const auto sched = schedule_for(cfg);
  const auto items = make_items(ds, cfg.grid);
  if (items.empty()) throw std::invalid_argument("empty dataset");

  std::mt19937_64 rng(tc.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();

  AdamW opt(params.count(), tc);
  TrainResult result;
  result.losses.reserve(static_cast<std::size_t>(tc.steps));
  for (int step = 0; step < tc.steps; ++step) {
    std::vector<const TrainItem*> batch;
    std::vector<ItemDraw> draws;
    for (int b = 0; b < tc.batch_size; ++b) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.push_back(&items[order[cursor++]]);
      draws.push_back(draw_item(rng, batch.back()->z0, sched.steps(), tc.condition_dropout));
    }
    nn::ParamGrads grads(params);
    const double l = batch_loss(params, batch, draws, sched, &grads);
    if (!std::isfinite(l)) throw std::runtime_error("training diverged");
    opt.step(params.values, grads.values);
    result.losses.push_back(l);
    if (progress) progress(step, l);
  }
  result.params = std::move(params);
  return result;
}

GradCheckReport grad_check(const nn::DenoiserParams& params, const std::vector<const TrainItem*>& batch,
                           const std::vector<ItemDraw>& draws, const diffusion::NoiseSchedule& sched,
                           const GradCheckOptions& opts) {
  nn::ParamGrads grads(params);
  batch_loss(params, batch, draws, sched, &grads);
  if (opts.corrupt_tensor) {
    const auto& s = params.layout.spec(*opts.corrupt_tensor);
    for (std::size_t i = 0; i < s.size(); ++i) grads.values[s.offset + i] *= 2.0;
  }

  std::mt19937_64 rng(opts.seed);
  nn::DenoiserParams probe = params;
  GradCheckReport report;
  for (const auto& s : params.layout.specs()) {
    report.groups_checked.push_back(s.name);
    // Distinct coordinates, drawn from those the batch actually touches when
    // there are enough of them; an all-zero comparison verifies nothing.
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (grads.values[s.offset + i] != 0.0) pool.push_back(i);
    }
    if (pool.size() < static_cast<std::size_t>(opts.coords_per_tensor)) {
      pool.resize(s.size());
      std::iota(pool.begin(), pool.end(), 0);
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(std::min(pool.size(), static_cast<std::size_t>(opts.coords_per_tensor)));
    for (std::size_t local : pool) {
      const std::size_t idx = s.offset + local;
      const double saved = probe.values[idx];
      probe.values[idx] = saved + opts.step;
      const double up = batch_loss(probe, batch, draws, sched);
      probe.values[idx] = saved - opts.step;
      const double down = batch_loss(probe, batch, draws, sched);
      probe.values[idx] = saved;

      GradCheckEntry e;
      e.tensor = s.name;
      e.index = idx - s.offset;
      e.analytic = grads.values[idx];
      e.numeric = (up - down) / (2.0 * opts.step);
      e.rel_error = std::abs(e.analytic - e.numeric) / std::max({std::abs(e.analytic), std::abs(e.numeric), 1e-8});
      report.max_rel_error = std::max(report.max_rel_error, e.rel_error);
      report.entries.push_back(e);
    }
  }
  return report;
}

}  // namespace foley::train
