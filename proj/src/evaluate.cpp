#include "foley/evaluate.hpp"

#include <algorithm>

#include "foley/metrics.hpp"

namespace foley {

GenerateRequest request_for_example(const synth::PairedExample& ex, const FoleyConfig& cfg, std::uint64_t seed) {
  GenerateRequest req;
  req.curve = ex.curve;
  req.mask = ex.masks;
  req.tag = ex.tag;
  req.script = ex.script;
  req.scales = {cfg.sample.s_text, cfg.sample.s_video};
  req.steps = cfg.sample.steps;
  req.sampler = cfg.sample.sampler == "ddpm" ? diffusion::Sampler::kDdpm : diffusion::Sampler::kDdim;
  req.seed = seed;
  return req;
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Visual-side vector for the cosine score: how much of each class is on screen.
Eigen::VectorXd visual_presence(const synth::PairedExample& ex, int classes) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(classes);
  for (int c = 0; c < classes; ++c) v(c) = ex.features.col(c).sum();
  return v;
}

}  // namespace

nlohmann::json evaluate(const Checkpoint& ck, const data::Dataset& held_out, const EvalOptions& opts) {
  const auto& cfg = ck.config;
  const int n = std::min<int>(opts.count, static_cast<int>(held_out.examples.size()));
  if (n < 2) throw std::invalid_argument("need at least two held-out clips");
  const auto bands = metrics::class_bands(cfg);
  const int k = cfg.synth.classes();

  Eigen::MatrixXd real_feats(n, k + 2), gen_feats(n, k + 2), gen_dists(n, k);
  std::vector<double> kls, cosines, env_r;
  int tag_hits = 0;
  for (int i = 0; i < n; ++i) {
    const auto& ex = held_out.examples[i];
    auto req = request_for_example(ex, cfg, opts.seed + static_cast<std::uint64_t>(i));
    req.steps = opts.steps;
    const auto res = generate(ck, req);

    real_feats.row(i) = metrics::clip_features(ex.spec, bands, ex.curve).transpose();
    gen_feats.row(i) = metrics::clip_features(res.mel, bands, res.achieved_envelope).transpose();
    const auto real_cls = metrics::band_energy_classify(ex.spec, bands);
    for (int c = 0; c < k; ++c) gen_dists(i, c) = res.class_distribution[c];
    kls.push_back(metrics::kl_divergence(real_cls.distribution, res.class_distribution));
    const Eigen::VectorXd presence = visual_presence(ex, k);
    const Eigen::Map<const Eigen::VectorXd> audio_vec(res.class_distribution.data(), k);
    if (presence.norm() > 0) cosines.push_back(metrics::scaled_cosine(audio_vec, presence, 100.0));
    env_r.push_back(res.envelope_r.value_or(0.0));
    if (res.predicted_class == ex.tag) ++tag_hits;
  }

  const auto fd = metrics::frechet_distance(metrics::gaussian_stats(real_feats), metrics::gaussian_stats(gen_feats));
  double kl_mean = 0.0;
  for (double v : kls) kl_mean += v / kls.size();
  double cos_mean = 0.0;
  for (double v : cosines) cos_mean += cosines.empty() ? 0.0 : v / cosines.size();

  return {{"metrics",
           {{"fd", fd},
            {"kl", kl_mean},
            {"is", metrics::inception_score(gen_dists)},
            {"cs_av", cos_mean},
            {"envelope_r_median", median(env_r)},
            {"tag_accuracy", static_cast<double>(tag_hits) / n}}},
          {"count", n},
          {"seed", opts.seed},
          {"steps", opts.steps},
          {"checkpoint", ck.id},
          {"config", to_json(cfg)}};
}

}  // namespace foley
