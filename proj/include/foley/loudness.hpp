#pragma once

#include <vector>

#include "foley/audio.hpp"

namespace foley::loudness {

struct RmsEnergy {
  std::vector<double> values;
  int window = 0;
  int hop = 0;
};

/// Low-rate nonnegative loudness envelope, `rate` values per second.
struct LoudnessCurve {
  std::vector<double> values;
  double rate = 10.0;

  std::size_t size() const { return values.size(); }
};

struct PipelineConfig {
  int rms_window = 1024;
  int rms_hop = 160;
  double rate = 10.0;
  int smooth_window = 3;
  double smooth_sigma = 3.5;
};

/// Frame RMS for windows starting at 0, hop, 2*hop, ... The tail is zero-padded
/// so the last window is complete.
RmsEnergy rms_energy(const AudioBuffer& audio, int window, int hop);

/// Means over the segments [floor(k L / n), floor((k+1) L / n)).
std::vector<double> adaptive_average_pool(const std::vector<double>& values, int out_len);

/// Normalized Gaussian weights over the integer offsets -h..h, h = window / 2.
std::vector<double> gaussian_kernel(int window, double sigma);

/// Symmetric Gaussian smoothing with replicated edges; preserves length.
std::vector<double> ewma_smooth(const std::vector<double>& values, int window, double sigma);

/// Curve length for a clip: ceil(seconds * rate).
int curve_length(double seconds, double rate);

LoudnessCurve loudness_pipeline(const AudioBuffer& audio, const PipelineConfig& cfg = {});

}  // namespace foley::loudness
