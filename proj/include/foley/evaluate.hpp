#pragma once

#include <cstdint>

#include <json.hpp>

#include "foley/checkpoint.hpp"
#include "foley/dataset.hpp"
#include "foley/generate.hpp"

namespace foley {

/// Request carrying every instruction of a paired example (tag, script + mask, curve).
GenerateRequest request_for_example(const synth::PairedExample& ex, const FoleyConfig& cfg, std::uint64_t seed);

struct EvalOptions {
  int count = 32;
  std::uint64_t seed = 0;
  int steps = 25;
};

/// Generates one clip per held-out example and reports FD, KL, IS, scaled cosine
/// and envelope correlation over toy features.
nlohmann::json evaluate(const Checkpoint& ck, const data::Dataset& held_out, const EvalOptions& opts);

}  // namespace foley
