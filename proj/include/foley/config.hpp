#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "foley/conditioning.hpp"
#include "foley/loudness.hpp"
#include <json.hpp>

namespace foley {

struct AudioConfig {
  double sample_rate = 16000.0;
  double clip_seconds = 2.0;
  int n_fft = 1024;
  int hop = 504;  // 2 s at 16 kHz -> 64 frames
  int n_mels = 16;
  double fmin = 0.0;
  double fmax = 4000.0;
  int griffin_lim_iterations = 32;
};

struct SynthConfig {
  std::vector<double> fundamentals_hz = {330.0, 660.0, 990.0, 1320.0};
  std::vector<std::string> class_names = {"hum", "buzz", "chime", "whistle"};
  int min_events = 1;
  int max_events = 3;
  double min_duration = 0.3;
  double max_duration = 0.6;
  double min_gain = 0.3;
  double max_gain = 1.0;
  // Upper bound on visible-but-silent objects per clip.
  int max_silent = 2;
  double ramp_seconds = 0.01;

  int classes() const { return static_cast<int>(fundamentals_hz.size()); }
};

struct ModelConfig {
  int channels_low = 16;
  int channels_high = 32;
  int attention_dim = 32;
  int time_embedding_dim = 32;
  int signal_hidden = 64;
  double fusion_init_scale = 4.0;
};

struct DiffusionConfig {
  int steps = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
};

struct TrainConfig {
  double learning_rate = 1e-4;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int batch_size = 16;
  int steps = 2000;
  double condition_dropout = 0.1;
  std::uint64_t seed = 0;
};

struct SampleConfig {
  int steps = 25;
  double s_text = 3.5;
  double s_video = 4.5;
  std::string sampler = "ddim";
};

struct FoleyConfig {
  AudioConfig audio;
  loudness::PipelineConfig loudness;
  cond::VisualGrid grid;
  SynthConfig synth;
  ModelConfig model;
  DiffusionConfig diffusion;
  TrainConfig train;
  SampleConfig sample;

  std::size_t clip_samples() const;
  int latent_height() const { return audio.n_mels; }
  int latent_width() const;
  int curve_length() const;
  // Throws std::invalid_argument on inconsistent settings.
  void validate() const;
};

nlohmann::json to_json(const FoleyConfig& cfg);
// Missing keys keep their defaults.
FoleyConfig config_from_json(const nlohmann::json& j);
FoleyConfig load_config(const std::string& path);

}  // namespace foley
