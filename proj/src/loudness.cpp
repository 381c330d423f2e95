#include "foley/loudness.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace foley::loudness {

RmsEnergy rms_energy(const AudioBuffer& audio, int window, int hop) {
  if (window < 1 || hop < 1) throw std::invalid_argument("invalid window or hop");
  const auto len = static_cast<long long>(audio.size());
  if (window > len) throw std::invalid_argument("window exceeds signal");

  const long long frames = (len - window + hop - 1) / hop + 1;
  RmsEnergy out;
  out.window = window;
  out.hop = hop;
  out.values.resize(static_cast<std::size_t>(frames));
  for (long long f = 0; f < frames; ++f) {
    const long long start = f * hop;
    const long long stop = std::min(start + window, len);
    double acc = 0.0;
    for (long long n = start; n < stop; ++n) acc += audio.samples[n] * audio.samples[n];
    out.values[f] = std::sqrt(acc / window);
  }
  return out;
}

std::vector<double> adaptive_average_pool(const std::vector<double>& values, int out_len) {
  if (out_len <= 0) throw std::invalid_argument("empty output");
  const auto len = static_cast<long long>(values.size());
  if (out_len > len) throw std::invalid_argument("output longer than input");
  std::vector<double> out(static_cast<std::size_t>(out_len));
  for (long long k = 0; k < out_len; ++k) {
    const long long lo = k * len / out_len;
    const long long hi = (k + 1) * len / out_len;
    double acc = 0.0;
    for (long long i = lo; i < hi; ++i) acc += values[i];
    out[k] = acc / static_cast<double>(hi - lo);
  }
  return out;
}

std::vector<double> gaussian_kernel(int window, double sigma) {
  if (window < 1 || window % 2 == 0) throw std::invalid_argument("window must be odd");
  if (!(sigma > 0.0)) throw std::invalid_argument("invalid sigma");
  const int half = window / 2;
  std::vector<double> w(static_cast<std::size_t>(window));
  double total = 0.0;
  for (int i = -half; i <= half; ++i) {
    w[i + half] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    total += w[i + half];
  }
  for (double& v : w) v /= total;
  return w;
}

std::vector<double> ewma_smooth(const std::vector<double>& values, int window, double sigma) {
  const auto kernel = gaussian_kernel(window, sigma);
  const int half = window / 2;
  const auto len = static_cast<int>(values.size());
  std::vector<double> out(values.size(), 0.0);
  for (int t = 0; t < len; ++t) {
    double acc = 0.0;
    for (int i = -half; i <= half; ++i) {
      const int src = std::clamp(t - i, 0, len - 1);
      acc += values[src] * kernel[i + half];
    }
    out[t] = acc;
  }
  return out;
}

int curve_length(double seconds, double rate) {
  // Guard against ceil(2.0000000001) style float noise.
  return static_cast<int>(std::ceil(seconds * rate - 1e-9));
}

LoudnessCurve loudness_pipeline(const AudioBuffer& audio, const PipelineConfig& cfg) {
  if (audio.size() == 0) throw std::invalid_argument("empty audio");
  const auto rms = rms_energy(audio, cfg.rms_window, cfg.rms_hop);
  const int out_len = curve_length(audio.seconds(), cfg.rate);
  LoudnessCurve curve;
  curve.rate = cfg.rate;
  curve.values = ewma_smooth(adaptive_average_pool(rms.values, out_len), cfg.smooth_window, cfg.smooth_sigma);
  return curve;
}

}  // namespace foley::loudness
