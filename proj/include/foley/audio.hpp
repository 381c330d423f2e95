#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace foley {

inline constexpr double kDefaultSampleRate = 16000.0;

/// Mono waveform. Samples nominally lie in [-1, 1].
struct AudioBuffer {
  std::vector<double> samples;
  double sample_rate = kDefaultSampleRate;

  std::size_t size() const { return samples.size(); }
  double seconds() const { return static_cast<double>(samples.size()) / sample_rate; }
};

// Throws std::invalid_argument if any sample is non-finite or the rate is not positive.
void validate(const AudioBuffer& audio);

/// Sample-wise sum of the clips, zero-padding shorter clips to the longest,
/// hard-clipped to [-1, 1].
AudioBuffer mix_audio(const std::vector<AudioBuffer>& clips);

// PCM 16-bit mono RIFF/WAVE. sample = round(clamp(x, -1, 1) * 32767).
std::vector<std::uint8_t> encode_wav(const AudioBuffer& audio);
AudioBuffer decode_wav(const std::vector<std::uint8_t>& bytes);
void write_wav(const std::string& path, const AudioBuffer& audio);
AudioBuffer read_wav(const std::string& path);

// Rounds every sample through the 16-bit PCM grid, as a write/read cycle would.
AudioBuffer quantize_pcm16(const AudioBuffer& audio);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

}  // namespace foley
