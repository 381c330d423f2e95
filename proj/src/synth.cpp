#include "foley/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace foley::synth {

Region class_quadrant(int class_id, const cond::VisualGrid& grid) {
  const int q = class_id % 4;
  return {(q / 2) * (grid.height / 2), (q % 2) * (grid.width / 2), grid.height / 2, grid.width / 2};
}

namespace {

Event draw_event(std::mt19937_64& rng, int class_id, const FoleyConfig& cfg) {
  const auto& s = cfg.synth;
  const double clip = cfg.audio.clip_seconds;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Event e;
  e.class_id = class_id;
  e.duration = s.min_duration + unit(rng) * (std::min(s.max_duration, clip) - s.min_duration);
  e.onset = unit(rng) * (clip - e.duration);
  e.gain = s.min_gain + unit(rng) * (s.max_gain - s.min_gain);
  e.envelope = static_cast<Envelope>(std::uniform_int_distribution<int>(0, 2)(rng));
  const Region quad = class_quadrant(class_id, cfg.grid);
  std::uniform_int_distribution<int> rows(std::max(1, quad.height / 2), quad.height);
  std::uniform_int_distribution<int> cols(std::max(1, quad.width / 2), quad.width);
  e.region.height = rows(rng);
  e.region.width = cols(rng);
  e.region.row = quad.row + std::uniform_int_distribution<int>(0, quad.height - e.region.height)(rng);
  e.region.col = quad.col + std::uniform_int_distribution<int>(0, quad.width - e.region.width)(rng);
  return e;
}

}  // namespace

EventScript sample_script(std::mt19937_64& rng, const FoleyConfig& cfg) {
  const int classes = cfg.synth.classes();
  EventScript script;
  script.clip_seconds = cfg.audio.clip_seconds;
  const int n = std::uniform_int_distribution<int>(cfg.synth.min_events, cfg.synth.max_events)(rng);
  std::vector<bool> sounding(static_cast<std::size_t>(classes), false);
  for (int i = 0; i < n; ++i) {
    const int c = std::uniform_int_distribution<int>(0, classes - 1)(rng);
    sounding[c] = true;
    script.events.push_back(draw_event(rng, c, cfg));
  }
  const int silent = std::uniform_int_distribution<int>(0, cfg.synth.max_silent)(rng);
  for (int i = 0; i < silent; ++i) {
    std::vector<int> free;
    for (int c = 0; c < classes; ++c) {
      if (!sounding[c]) free.push_back(c);
    }
    if (free.empty()) break;
    const int c = free[std::uniform_int_distribution<std::size_t>(0, free.size() - 1)(rng)];
    sounding[c] = true;  // one object per class
    Event e = draw_event(rng, c, cfg);
    e.silent = true;
    script.events.push_back(e);
  }
  return script;
}

void validate_script(const EventScript& script, const FoleyConfig& cfg) {
  if (!(script.clip_seconds > 0)) throw std::invalid_argument("invalid clip length");
  for (const auto& e : script.events) {
    if (e.class_id < 0 || e.class_id >= cfg.synth.classes()) throw std::invalid_argument("unknown class");
    if (!(e.onset >= 0 && e.duration > 0 && e.end() <= script.clip_seconds + 1e-9)) {
      throw std::invalid_argument("event outside clip");
    }
    if (!(e.gain > 0 && e.gain <= 1)) throw std::invalid_argument("invalid gain");
    const auto& r = e.region;
    if (r.height < 1 || r.width < 1 || r.row < 0 || r.col < 0 || r.row + r.height > cfg.grid.height ||
        r.col + r.width > cfg.grid.width) {
      throw std::invalid_argument("region out of bounds");
    }
  }
}

AudioBuffer render_audio(const EventScript& script, double sample_rate, const SynthConfig& synth) {
  AudioBuffer out;
  out.sample_rate = sample_rate;
  out.samples.assign(static_cast<std::size_t>(std::llround(script.clip_seconds * sample_rate)), 0.0);
  const auto len = static_cast<long long>(out.samples.size());
  for (const auto& e : script.events) {
    if (e.silent) continue;
    if (e.class_id < 0 || e.class_id >= synth.classes()) throw std::invalid_argument("unknown class");
    const double freq = synth.fundamentals_hz[e.class_id];
    const long long first = std::max(0LL, static_cast<long long>(std::ceil(e.onset * sample_rate)));
    const long long last = std::min(len, static_cast<long long>(std::ceil(e.end() * sample_rate)));
    for (long long n = first; n < last; ++n) {
      const double tau = n / sample_rate - e.onset;
      double env = 1.0;
      if (e.envelope == Envelope::kRise) env = tau / e.duration;
      if (e.envelope == Envelope::kFall) env = 1.0 - tau / e.duration;
      const double edge = std::min({1.0, tau / synth.ramp_seconds, (e.duration - tau) / synth.ramp_seconds});
      const double ramp = 0.5 - 0.5 * std::cos(std::numbers::pi * std::max(0.0, edge));
      out.samples[n] += e.gain * env * ramp * std::sin(2.0 * std::numbers::pi * freq * tau);
    }
  }
  for (double& s : out.samples) s = std::clamp(s, -1.0, 1.0);
  return out;
}

cond::MaskTrack event_masks(const EventScript& script, const cond::VisualGrid& grid) {
  cond::MaskTrack masks(grid.frames, grid.height, grid.width, 0);
  for (const auto& e : script.events) {
    if (e.silent) continue;
    for (int t = 0; t < grid.frames; ++t) {
      if (cond::event_active(e, t, grid.fps)) masks.fill_region(t, e.region, 1);
    }
  }
  return masks;
}

int dominant_tag(const EventScript& script) {
  int tag = -1;
  double best = -1.0;
  for (const auto& e : script.events) {
    if (e.silent) continue;
    const double score = e.gain * e.duration;
    if (score > best) {
      best = score;
      tag = e.class_id;
    }
  }
  return tag < 0 ? 0 : tag;
}

dsp::FilterBank make_filterbank(const FoleyConfig& cfg) {
  return dsp::mel_filterbank(cfg.audio.n_fft, cfg.audio.n_mels, cfg.audio.sample_rate, cfg.audio.fmin, cfg.audio.fmax);
}

dsp::MelSpectrogram analyze(const AudioBuffer& audio, const FoleyConfig& cfg, const dsp::FilterBank& fb) {
  return dsp::log_mel(dsp::stft_magnitude(audio, cfg.audio.n_fft, cfg.audio.hop), fb);
}

PairedExample example_from_audio(const EventScript& script, AudioBuffer audio, const FoleyConfig& cfg,
                                 const dsp::FilterBank& fb) {
  PairedExample ex;
  ex.spec = analyze(audio, cfg, fb);
  ex.curve = loudness::loudness_pipeline(audio, cfg.loudness);
  ex.masks = event_masks(script, cfg.grid);
  ex.features = cond::toy_visual_features(script, nullptr, cfg.grid);
  ex.tag = dominant_tag(script);
  ex.script = script;
  ex.audio = std::move(audio);
  return ex;
}

PairedExample generate_clip(const EventScript& script, const FoleyConfig& cfg, const dsp::FilterBank& fb) {
  validate_script(script, cfg);
  return example_from_audio(script, render_audio(script, cfg.audio.sample_rate, cfg.synth), cfg, fb);
}

cond::ConditionSet conditions_for(const PairedExample& ex, const cond::VisualGrid& grid) {
  cond::ConditionSet c;
  c.text = ex.tag;
  c.visual = cond::VisualCondition{ex.features, cond::toy_visual_features(ex.script, &ex.masks, grid)};
  c.signal = ex.curve;
  return c;
}

}  // namespace foley::synth
