#include "foley/generate.hpp"

#include <random>

#include "foley/dataset.hpp"
#include "foley/metrics.hpp"
#include "foley/synth.hpp"

namespace foley {
namespace {

using json = nlohmann::json;

double number_field(const json& j, const char* key, double fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  if (!j[key].is_number()) throw RequestError(key, std::string(key) + " must be a number");
  const double v = j[key].get<double>();
  if (!std::isfinite(v)) throw RequestError(key, std::string(key) + " must be finite");
  return v;
}

}  // namespace

synth::EventScript default_scene(const FoleyConfig& cfg) {
  synth::EventScript s;
  s.clip_seconds = cfg.audio.clip_seconds;
  for (int c = 0; c < cfg.synth.classes(); ++c) {
    synth::Event e;
    e.class_id = c;
    e.onset = 0.0;
    e.duration = cfg.audio.clip_seconds;
    e.gain = 1.0;
    e.region = synth::class_quadrant(c, cfg.grid);
    s.events.push_back(e);
  }
  return s;
}

int class_id_from_name(const std::string& name, const FoleyConfig& cfg) {
  for (int c = 0; c < cfg.synth.classes(); ++c) {
    if (cfg.synth.class_names[c] == name) return c;
  }
  throw RequestError("tag", "unknown tag");
}

GenerateRequest request_from_json(const json& j, const FoleyConfig& cfg) {
  if (!j.is_object()) throw RequestError("", "request must be a JSON object");
  GenerateRequest req;
  req.scales = {cfg.sample.s_text, cfg.sample.s_video};
  req.steps = cfg.sample.steps;
  req.sampler = cfg.sample.sampler == "ddpm" ? diffusion::Sampler::kDdpm : diffusion::Sampler::kDdim;

  if (j.contains("curve") && !j["curve"].is_null()) {
    try {
      req.curve = data::curve_from_json(j["curve"]);
    } catch (const std::invalid_argument& e) {
      throw RequestError("curve", e.what());
    }
    if (static_cast<int>(req.curve->values.size()) != cfg.curve_length())
      throw RequestError("curve", "curve length mismatch");
  }
  if (j.contains("mask") && !j["mask"].is_null()) {
    try {
      req.mask = data::mask_from_json(j["mask"], cfg.grid);
    } catch (const std::invalid_argument& e) {
      throw RequestError("mask", e.what());
    }
  }
  if (j.contains("tag") && !j["tag"].is_null()) {
    const auto& t = j["tag"];
    if (t.is_string()) {
      req.tag = class_id_from_name(t.get<std::string>(), cfg);
    } else if (t.is_number_integer()) {
      const int id = t.get<int>();
      if (id < 0 || id >= cfg.synth.classes()) throw RequestError("tag", "unknown tag");
      req.tag = id;
    } else {
      throw RequestError("tag", "tag must be a class name");
    }
  }
  if (j.contains("script") && !j["script"].is_null()) {
    try {
      req.script = data::script_from_json(j["script"]);
      req.script->clip_seconds = cfg.audio.clip_seconds;
      synth::validate_script(*req.script, cfg);
    } catch (const RequestError&) {
      throw;
    } catch (const std::exception& e) {
      throw RequestError("script", e.what());
    }
  }
  req.scales.text = number_field(j, "s_text", req.scales.text);
  req.scales.video = number_field(j, "s_video", req.scales.video);
  if (j.contains("steps") && !j["steps"].is_null()) {
    if (!j["steps"].is_number_integer()) throw RequestError("steps", "steps must be an integer");
    req.steps = j["steps"].get<int>();
  }
  if (req.steps < 1 || req.steps > cfg.diffusion.steps) throw RequestError("steps", "steps out of range");
  if (j.contains("sampler") && !j["sampler"].is_null()) {
    const auto& s = j["sampler"];
    if (s == "ddim") {
      req.sampler = diffusion::Sampler::kDdim;
    } else if (s == "ddpm") {
      req.sampler = diffusion::Sampler::kDdpm;
    } else {
      throw RequestError("sampler", "sampler must be ddpm or ddim");
    }
  }
  if (j.contains("seed") && !j["seed"].is_null()) {
    if (!j["seed"].is_number_unsigned())
      throw RequestError("seed", "seed must be a nonnegative integer");
    req.seed = j["seed"].get<std::uint64_t>();
  }
  return req;
}

json request_to_json(const GenerateRequest& req, const FoleyConfig& cfg) {
  json j;
  j["curve"] = req.curve ? data::curve_to_json(*req.curve) : json(nullptr);
  j["mask"] = req.mask ? data::mask_to_json(*req.mask) : json(nullptr);
  j["tag"] = req.tag ? json(cfg.synth.class_names[*req.tag]) : json(nullptr);
  j["script"] = req.script ? data::script_to_json(*req.script) : json(nullptr);
  j["s_text"] = req.scales.text;
  j["s_video"] = req.scales.video;
  j["steps"] = req.steps;
  j["sampler"] = req.sampler == diffusion::Sampler::kDdpm ? "ddpm" : "ddim";
  j["seed"] = req.seed ? json(*req.seed) : json(nullptr);
  return j;
}

cond::ConditionSet conditions_for(const GenerateRequest& req, const FoleyConfig& cfg) {
  cond::ConditionSet c;
  c.text = req.tag;
  c.signal = req.curve;
  if (req.script || req.mask) {
    const auto scene = req.script ? *req.script : default_scene(cfg);
    c.visual = cond::make_visual_condition(scene, req.mask ? &*req.mask : nullptr, cfg.grid);
  }
  return c;
}

GenerateResult generate(const Checkpoint& ck, const GenerateRequest& req) {
  const auto& cfg = ck.config;
  GenerateResult r;
  if (req.seed) {
    r.seed = *req.seed;
  } else {
    std::random_device rd;
    // Kept below 2^53 so the echoed seed survives JSON clients that use doubles.
    r.seed = ((static_cast<std::uint64_t>(rd()) << 32) | rd()) & ((1ULL << 53) - 1);
  }

  const auto cond = conditions_for(req, cfg);
  const auto sched = diffusion::make_schedule(cfg.diffusion.steps, cfg.diffusion.beta_start, cfg.diffusion.beta_end);
  diffusion::SampleOptions opts;
  opts.steps = req.steps;
  opts.scales = req.scales;
  opts.sampler = req.sampler;
  opts.seed = r.seed;
  const auto model = [&ck](const Latent& z, int t, const cond::ConditionSet& c) { return nn::denoise(z, t, c, ck.params); };
  const Latent z0 = diffusion::sample(model, cond, sched, cfg.latent_height(), cfg.latent_width(), opts);

  const double frame_rate = cfg.audio.sample_rate / cfg.audio.hop;
  r.mel = data::from_latent(z0, ck.stats, frame_rate);
  const auto fb = synth::make_filterbank(cfg);
  const auto mag = dsp::mel_to_magnitude(r.mel, fb);
  const auto gl = dsp::griffin_lim(mag, cfg.audio.griffin_lim_iterations, r.seed, cfg.clip_samples());

  r.wav = encode_wav(gl.audio);
  r.audio = decode_wav(r.wav);
  r.achieved_envelope = loudness::loudness_pipeline(r.audio, cfg.loudness);
  if (req.curve) {
    try {
      r.envelope_r = metrics::pearson(r.achieved_envelope.values, req.curve->values);
    } catch (const std::invalid_argument&) {
      r.envelope_r.reset();  // flat target or silent output
    }
  }
  const auto cls = metrics::band_energy_classify(r.mel, metrics::class_bands(cfg));
  r.predicted_class = cls.class_id;
  r.class_distribution = cls.distribution;
  return r;
}

json result_to_json(const GenerateResult& r, const FoleyConfig& cfg) {
  json mel = json::array();
  for (int f = 0; f < r.mel.frames(); ++f) {
    json row = json::array();
    for (int m = 0; m < r.mel.n_mels(); ++m) row.push_back(r.mel.values(f, m));
    mel.push_back(std::move(row));
  }
  return {{"wav", base64_encode(r.wav)},
          {"mel", std::move(mel)},
          {"achieved_envelope", data::curve_to_json(r.achieved_envelope)},
          {"envelope_r", r.envelope_r ? json(*r.envelope_r) : json(nullptr)},
          {"predicted_class", r.predicted_class},
          {"predicted_class_name", cfg.synth.class_names[r.predicted_class]},
          {"class_distribution", r.class_distribution},
          {"seed", r.seed}};
}

}  // namespace foley
