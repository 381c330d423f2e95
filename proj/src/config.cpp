#include "foley/config.hpp"

#include <fstream>
#include <stdexcept>

namespace foley {

std::size_t FoleyConfig::clip_samples() const {
  return static_cast<std::size_t>(std::llround(audio.clip_seconds * audio.sample_rate));
}

int FoleyConfig::latent_width() const { return static_cast<int>(clip_samples() / audio.hop) + 1; }

int FoleyConfig::curve_length() const { return loudness::curve_length(audio.clip_seconds, loudness.rate); }

void FoleyConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("invalid config: " + what); };
  if (!(audio.sample_rate > 0)) fail("sample_rate");
  if (!(audio.clip_seconds > 0)) fail("clip_seconds");
  if (audio.n_fft < 2 || audio.hop < 1) fail("n_fft/hop");
  if (clip_samples() < static_cast<std::size_t>(audio.n_fft)) fail("clip shorter than n_fft");
  if (latent_height() % 4 != 0 || latent_width() % 4 != 0) fail("latent dims must be divisible by 4");
  if (synth.classes() < 1 || synth.classes() >= grid.channels) fail("class count");
  if (synth.class_names.size() != synth.fundamentals_hz.size()) fail("class_names");
  if (synth.min_events < 1 || synth.max_events < synth.min_events) fail("event counts");
  if (!(synth.min_gain > 0 && synth.min_gain <= synth.max_gain && synth.max_gain <= 1.0)) fail("gain range");
  if (!(synth.min_duration > 0 && synth.min_duration < audio.clip_seconds)) fail("min_duration");
  if (!(synth.max_duration >= synth.min_duration && synth.max_duration <= audio.clip_seconds)) fail("max_duration");
  if (grid.height < 2 || grid.width < 2 || grid.frames < 1 || !(grid.fps > 0)) fail("grid");
  if (train.batch_size < 1 || train.steps < 0 || !(train.learning_rate >= 0)) fail("train");
  if (sample.steps < 1 || sample.steps > diffusion.steps) fail("sample.steps");
  if (sample.sampler != "ddim" && sample.sampler != "ddpm") fail("sampler");
}

nlohmann::json to_json(const FoleyConfig& c) {
  nlohmann::json j;
  j["audio"] = {{"sample_rate", c.audio.sample_rate}, {"clip_seconds", c.audio.clip_seconds},
                {"n_fft", c.audio.n_fft},             {"hop", c.audio.hop},
                {"n_mels", c.audio.n_mels},           {"fmin", c.audio.fmin},
                {"fmax", c.audio.fmax},               {"griffin_lim_iterations", c.audio.griffin_lim_iterations}};
  j["loudness"] = {{"rms_window", c.loudness.rms_window}, {"rms_hop", c.loudness.rms_hop},
                   {"rate", c.loudness.rate},             {"smooth_window", c.loudness.smooth_window},
                   {"smooth_sigma", c.loudness.smooth_sigma}};
  j["grid"] = {{"frames", c.grid.frames}, {"height", c.grid.height}, {"width", c.grid.width},
               {"fps", c.grid.fps},       {"channels", c.grid.channels}};
  j["synth"] = {{"fundamentals_hz", c.synth.fundamentals_hz}, {"min_events", c.synth.min_events},
                {"max_events", c.synth.max_events},           {"min_duration", c.synth.min_duration},
                {"max_duration", c.synth.max_duration},
                {"min_gain", c.synth.min_gain},               {"max_gain", c.synth.max_gain},
                {"max_silent", c.synth.max_silent},           {"ramp_seconds", c.synth.ramp_seconds},
                {"class_names", c.synth.class_names}};
  j["model"] = {{"channels_low", c.model.channels_low},
                {"channels_high", c.model.channels_high},
                {"attention_dim", c.model.attention_dim},
                {"time_embedding_dim", c.model.time_embedding_dim},
                {"signal_hidden", c.model.signal_hidden},
                {"fusion_init_scale", c.model.fusion_init_scale}};
  j["diffusion"] = {{"steps", c.diffusion.steps}, {"beta_start", c.diffusion.beta_start},
                    {"beta_end", c.diffusion.beta_end}};
  j["train"] = {{"learning_rate", c.train.learning_rate},
                {"weight_decay", c.train.weight_decay},
                {"beta1", c.train.beta1},
                {"beta2", c.train.beta2},
                {"adam_epsilon", c.train.adam_epsilon},
                {"batch_size", c.train.batch_size},
                {"steps", c.train.steps},
                {"condition_dropout", c.train.condition_dropout},
                {"seed", c.train.seed}};
  j["sample"] = {{"steps", c.sample.steps},
                 {"s_text", c.sample.s_text},
                 {"s_video", c.sample.s_video},
                 {"sampler", c.sample.sampler}};
  return j;
}

namespace {

template <typename T>
void read(const nlohmann::json& j, const char* section, const char* key, T& out) {
  if (!j.contains(section)) return;
  const auto& s = j.at(section);
  if (!s.is_object()) throw std::invalid_argument(std::string("invalid config section: ") + section);
  if (s.contains(key)) {
    try {
      out = s.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw std::invalid_argument(std::string("invalid config value: ") + section + "." + key);
    }
  }
}

}  // namespace

FoleyConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  FoleyConfig c;
  read(j, "audio", "sample_rate", c.audio.sample_rate);
  read(j, "audio", "clip_seconds", c.audio.clip_seconds);
  read(j, "audio", "n_fft", c.audio.n_fft);
  read(j, "audio", "hop", c.audio.hop);
  read(j, "audio", "n_mels", c.audio.n_mels);
  read(j, "audio", "fmin", c.audio.fmin);
  read(j, "audio", "fmax", c.audio.fmax);
  read(j, "audio", "griffin_lim_iterations", c.audio.griffin_lim_iterations);
  read(j, "loudness", "rms_window", c.loudness.rms_window);
  read(j, "loudness", "rms_hop", c.loudness.rms_hop);
  read(j, "loudness", "rate", c.loudness.rate);
  read(j, "loudness", "smooth_window", c.loudness.smooth_window);
  read(j, "loudness", "smooth_sigma", c.loudness.smooth_sigma);
  read(j, "grid", "frames", c.grid.frames);
  read(j, "grid", "height", c.grid.height);
  read(j, "grid", "width", c.grid.width);
  read(j, "grid", "fps", c.grid.fps);
  read(j, "grid", "channels", c.grid.channels);
  read(j, "synth", "fundamentals_hz", c.synth.fundamentals_hz);
  read(j, "synth", "min_events", c.synth.min_events);
  read(j, "synth", "max_events", c.synth.max_events);
  read(j, "synth", "min_duration", c.synth.min_duration);
  read(j, "synth", "max_duration", c.synth.max_duration);
  read(j, "synth", "min_gain", c.synth.min_gain);
  read(j, "synth", "max_gain", c.synth.max_gain);
  read(j, "synth", "max_silent", c.synth.max_silent);
  read(j, "synth", "ramp_seconds", c.synth.ramp_seconds);
  read(j, "synth", "class_names", c.synth.class_names);
  read(j, "model", "channels_low", c.model.channels_low);
  read(j, "model", "channels_high", c.model.channels_high);
  read(j, "model", "attention_dim", c.model.attention_dim);
  read(j, "model", "time_embedding_dim", c.model.time_embedding_dim);
  read(j, "model", "signal_hidden", c.model.signal_hidden);
  read(j, "model", "fusion_init_scale", c.model.fusion_init_scale);
  read(j, "diffusion", "steps", c.diffusion.steps);
  read(j, "diffusion", "beta_start", c.diffusion.beta_start);
  read(j, "diffusion", "beta_end", c.diffusion.beta_end);
  read(j, "train", "learning_rate", c.train.learning_rate);
  read(j, "train", "weight_decay", c.train.weight_decay);
  read(j, "train", "beta1", c.train.beta1);
  read(j, "train", "beta2", c.train.beta2);
  read(j, "train", "adam_epsilon", c.train.adam_epsilon);
  read(j, "train", "batch_size", c.train.batch_size);
  read(j, "train", "steps", c.train.steps);
  read(j, "train", "condition_dropout", c.train.condition_dropout);
  read(j, "train", "seed", c.train.seed);
  read(j, "sample", "steps", c.sample.steps);
  read(j, "sample", "s_text", c.sample.s_text);
  read(j, "sample", "s_video", c.sample.s_video);
  read(j, "sample", "sampler", c.sample.sampler);
  c.validate();
  return c;
}

FoleyConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open config " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("malformed config JSON: ") + e.what());
  }
  return config_from_json(j);
}

}  // namespace foley
