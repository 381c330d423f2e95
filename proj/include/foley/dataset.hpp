#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "foley/synth.hpp"

namespace foley::data {

/// Scalar affine normalization of log-mel cells into the latent space.
struct NormStats {
  double mean = 0.0;
  double stddev = 1.0;
};

NormStats compute_stats(const std::vector<synth::PairedExample>& examples);

/// Log-mel (frames x mels) -> latent (h = mels, w = frames).
Latent to_latent(const dsp::MelSpectrogram& spec, const NormStats& stats);
dsp::MelSpectrogram from_latent(const Latent& z, const NormStats& stats, double frame_rate);

struct Dataset {
  std::vector<synth::PairedExample> examples;
  NormStats stats;
};

/// In-memory synthetic set drawn from one generator seeded with `seed`.
Dataset generate_dataset(const FoleyConfig& cfg, int count, std::uint64_t seed, bool quantize = false);

// ---- JSON schemas shared by the CLI, the service and the UI -----------------

nlohmann::json curve_to_json(const loudness::LoudnessCurve& curve);
loudness::LoudnessCurve curve_from_json(const nlohmann::json& j);

/// {"frames":[{"t":int,"cells":[[0/1,...],...]}]}; omitted frames are all ones.
nlohmann::json mask_to_json(const cond::MaskTrack& mask);
cond::MaskTrack mask_from_json(const nlohmann::json& j, const cond::VisualGrid& grid);

nlohmann::json script_to_json(const synth::EventScript& script);
synth::EventScript script_from_json(const nlohmann::json& j);

nlohmann::json read_json(const std::string& path);
void write_json(const std::string& path, const nlohmann::json& j);

// ---- On-disk layout ----------------------------------------------------------
// <root>/<split>/manifest.json
// <root>/<split>/<id>/{clip.wav, script.json, curve.json, mask.json}

/// Writes the split and returns its manifest. Stats are computed from the
/// 16-bit audio exactly as it will be read back.
nlohmann::json write_split(const std::string& root, const std::string& split, const FoleyConfig& cfg, int count,
                           std::uint64_t seed);

Dataset load_split(const std::string& split_dir, const FoleyConfig& cfg);

}  // namespace foley::data
