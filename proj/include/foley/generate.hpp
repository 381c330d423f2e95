#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "foley/audio.hpp"
#include "foley/checkpoint.hpp"
#include "foley/diffusion.hpp"
#include "foley/script.hpp"

namespace foley {

/// Field-level validation failure: `field` names the offending request key.
class RequestError : public std::invalid_argument {
 public:
  RequestError(std::string field, const std::string& message)
      : std::invalid_argument(message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct GenerateRequest {
  std::optional<loudness::LoudnessCurve> curve;
  std::optional<cond::MaskTrack> mask;
  std::optional<int> tag;
  // Toy video. When absent but a mask is given, the default scene is used.
  std::optional<synth::EventScript> script;
  diffusion::GuidanceScales scales;
  int steps = 25;
  diffusion::Sampler sampler = diffusion::Sampler::kDdim;
  std::optional<std::uint64_t> seed;
};

/// Four objects, one per class in its canonical quadrant, visible for the whole clip.
synth::EventScript default_scene(const FoleyConfig& cfg);

int class_id_from_name(const std::string& name, const FoleyConfig& cfg);

/// Throws RequestError on any invalid field.
GenerateRequest request_from_json(const nlohmann::json& j, const FoleyConfig& cfg);
nlohmann::json request_to_json(const GenerateRequest& req, const FoleyConfig& cfg);

cond::ConditionSet conditions_for(const GenerateRequest& req, const FoleyConfig& cfg);

struct GenerateResult {
  std::vector<unsigned char> wav;
  AudioBuffer audio;  // decoded from wav
  dsp::MelSpectrogram mel;
  loudness::LoudnessCurve achieved_envelope;
  std::optional<double> envelope_r;
  int predicted_class = 0;
  std::vector<double> class_distribution;
  std::uint64_t seed = 0;
};

/// Sample -> de-normalize -> Griffin-Lim -> 16-bit WAV. Deterministic given the seed.
GenerateResult generate(const Checkpoint& ck, const GenerateRequest& req);

nlohmann::json result_to_json(const GenerateResult& r, const FoleyConfig& cfg);

}  // namespace foley
