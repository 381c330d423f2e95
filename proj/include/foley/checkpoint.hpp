#pragma once

#include <string>
#include <vector>

#include "foley/config.hpp"
#include "foley/dataset.hpp"
#include "foley/denoiser.hpp"

namespace foley {

/// "CFLY" | u32 version | u64 header bytes | JSON header | f32 LE blobs in manifest order.
struct Checkpoint {
  FoleyConfig config;
  data::NormStats stats;
  nn::DenoiserParams params;
  std::string id;  // content hash of the serialized bytes
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<unsigned char> encode_checkpoint(const FoleyConfig& cfg, const data::NormStats& stats,
                                             const nn::DenoiserParams& params);
Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes);

void save_checkpoint(const std::string& path, const FoleyConfig& cfg, const data::NormStats& stats,
                     const nn::DenoiserParams& params);
/// Throws std::invalid_argument("missing checkpoint: <path>") if the file does not exist.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace foley
