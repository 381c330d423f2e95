#include "foley/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>
#include <stdexcept>

#include <fftw3.h>

namespace foley::dsp {

namespace {

using Complex = std::complex<double>;

// FFTW plans are created under a lock and executed through the new-array
// interface, which is thread-safe.
struct Plans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [n, p] : plans_) {
      fftw_destroy_plan(p.forward);
      fftw_destroy_plan(p.inverse);
    }
  }

  Plans get(int n) {
    std::lock_guard lock(mu_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    std::vector<double> real(static_cast<std::size_t>(n));
    std::vector<Complex> spec(static_cast<std::size_t>(n / 2 + 1));
    auto* cplx = reinterpret_cast<fftw_complex*>(spec.data());
    Plans p;
    p.forward = fftw_plan_dft_r2c_1d(n, real.data(), cplx, FFTW_ESTIMATE | FFTW_UNALIGNED);
    p.inverse = fftw_plan_dft_c2r_1d(n, cplx, real.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(n, p);
    return p;
  }

 private:
  std::mutex mu_;
  std::map<int, Plans> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

// frames x bins complex STFT of a reflection-padded signal.
std::vector<std::vector<Complex>> stft_complex(const std::vector<double>& x, int n_fft, int hop) {
  const auto len = static_cast<std::ptrdiff_t>(x.size());
  const int frames = stft_frames(x.size(), hop);
  const int bins = n_fft / 2 + 1;
  const std::ptrdiff_t pad = n_fft / 2;
  const auto window = hann_window(n_fft);
  const Plans plans = plan_cache().get(n_fft);

  std::vector<std::vector<Complex>> out(static_cast<std::size_t>(frames), std::vector<Complex>(bins));
  std::vector<double> frame(static_cast<std::size_t>(n_fft));
  for (int m = 0; m < frames; ++m) {
    const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(m) * hop - pad;
    for (int n = 0; n < n_fft; ++n) frame[n] = window[n] * x[reflect_index(start + n, len)];
    fftw_execute_dft_r2c(plans.forward, frame.data(), reinterpret_cast<fftw_complex*>(out[m].data()));
  }
  return out;
}

// Least-squares inverse of stft_complex: overlap-add of windowed inverse frames,
// folded back through the reflection padding and divided by the folded window power.
std::vector<double> istft_least_squares(const std::vector<std::vector<Complex>>& spec, int n_fft, int hop,
                                        std::size_t length) {
  const auto len = static_cast<std::ptrdiff_t>(length);
  const std::ptrdiff_t pad = n_fft / 2;
  const auto window = hann_window(n_fft);
  const Plans plans = plan_cache().get(n_fft);

  std::vector<double> num(length, 0.0);
  std::vector<double> den(length, 0.0);
  std::vector<Complex> buf(static_cast<std::size_t>(n_fft / 2 + 1));
  std::vector<double> frame(static_cast<std::size_t>(n_fft));
  for (std::size_t m = 0; m < spec.size(); ++m) {
    buf = spec[m];  // c2r overwrites its input
    fftw_execute_dft_c2r(plans.inverse, reinterpret_cast<fftw_complex*>(buf.data()), frame.data());
    const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(m) * hop - pad;
    for (int n = 0; n < n_fft; ++n) {
      const auto i = reflect_index(start + n, len);
      num[i] += window[n] * frame[n] / n_fft;
      den[i] += window[n] * window[n];
    }
  }
  for (std::size_t i = 0; i < length; ++i) num[i] = den[i] > 0.0 ? num[i] / den[i] : 0.0;
  return num;
}

// Frobenius norm over the two-sided spectrum, from one-sided bins.
double two_sided_weight(int k, int n_fft) {
  return (k == 0 || (n_fft % 2 == 0 && k == n_fft / 2)) ? 1.0 : 2.0;
}

double convergence_error(const std::vector<std::vector<Complex>>& spec, const MagnitudeGrid& mag) {
  double diff = 0.0;
  double ref = 0.0;
  for (int m = 0; m < mag.frames(); ++m) {
    for (int k = 0; k < mag.bins(); ++k) {
      const double w = two_sided_weight(k, mag.n_fft);
      const double d = std::abs(spec[m][k]) - mag.values(m, k);
      diff += w * d * d;
      ref += w * mag.values(m, k) * mag.values(m, k);
    }
  }
  return ref > 0.0 ? std::sqrt(diff / ref) : 0.0;
}

}  // namespace

double hz_to_mel(double hz) { return kMelScaleConstant * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / kMelScaleConstant) - 1.0); }

std::vector<double> hann_window(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  return w;
}

std::ptrdiff_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t len) {
  if (len == 1) return 0;
  const std::ptrdiff_t period = 2 * (len - 1);
  i %= period;
  if (i < 0) i += period;
  return i < len ? i : period - i;
}

MagnitudeGrid stft_magnitude(const AudioBuffer& audio, int n_fft, int hop) {
  if (hop <= 0) throw std::invalid_argument("invalid hop");
  if (n_fft < 2) throw std::invalid_argument("invalid n_fft");
  if (audio.size() < static_cast<std::size_t>(n_fft)) throw std::invalid_argument("input too short");
  const auto spec = stft_complex(audio.samples, n_fft, hop);
  MagnitudeGrid out;
  out.n_fft = n_fft;
  out.hop = hop;
  out.sample_rate = audio.sample_rate;
  out.values.resize(static_cast<Eigen::Index>(spec.size()), n_fft / 2 + 1);
  for (std::size_t m = 0; m < spec.size(); ++m) {
    for (int k = 0; k <= n_fft / 2; ++k) out.values(static_cast<Eigen::Index>(m), k) = std::abs(spec[m][k]);
  }
  return out;
}

FilterBank mel_filterbank(int n_fft, int n_mels, double sample_rate, double fmin, double fmax) {
  if (n_mels < 1) throw std::invalid_argument("invalid mel count");
  if (fmax > sample_rate / 2.0) throw std::invalid_argument("fmax above Nyquist");
  if (!(fmin >= 0.0 && fmin < fmax)) throw std::invalid_argument("invalid frequency range");

  const int bins = n_fft / 2 + 1;
  const double mel_lo = hz_to_mel(fmin);
  const double mel_hi = hz_to_mel(fmax);
  std::vector<double> edges(static_cast<std::size_t>(n_mels + 2));
  for (int i = 0; i < n_mels + 2; ++i) edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));

  FilterBank fb;
  fb.fmin = fmin;
  fb.fmax = fmax;
  fb.sample_rate = sample_rate;
  fb.n_fft = n_fft;
  fb.weights = RowMatrix::Zero(n_mels, bins);
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges[m], center = edges[m + 1], hi = edges[m + 2];
    fb.centers_hz.push_back(center);
    for (int k = 0; k < bins; ++k) {
      const double f = k * sample_rate / n_fft;
      double w = 0.0;
      if (f > lo && f < center) {
        w = (f - lo) / (center - lo);
      } else if (f >= center && f < hi) {
        w = (hi - f) / (hi - center);
      }
      fb.weights(m, k) = w;
    }
    const double area = fb.weights.row(m).sum();
    if (area <= 0.0) throw std::invalid_argument("empty mel filter");
    fb.weights.row(m) /= area;
  }
  return fb;
}

MelSpectrogram log_mel(const MagnitudeGrid& mag, const FilterBank& fb, double floor_epsilon) {
  if (fb.bins() != mag.bins()) throw std::invalid_argument("filterbank/grid mismatch");
  if (!(floor_epsilon > 0.0)) throw std::invalid_argument("invalid floor");
  MelSpectrogram out;
  out.frame_rate = mag.sample_rate / mag.hop;
  const RowMatrix power = mag.values.array().square().matrix();
  out.values = (power * fb.weights.transpose()).array().max(floor_epsilon).log().matrix();
  return out;
}

MagnitudeGrid mel_to_magnitude(const MelSpectrogram& mel, const FilterBank& fb) {
  if (mel.n_mels() != fb.n_mels()) throw std::invalid_argument("filterbank/grid mismatch");
  const Eigen::MatrixXd pinv = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(fb.weights).pseudoInverse();
  MagnitudeGrid out;
  out.n_fft = fb.n_fft;
  out.sample_rate = fb.sample_rate;
  out.hop = static_cast<int>(std::lround(fb.sample_rate / mel.frame_rate));
  const RowMatrix power = mel.values.array().exp().matrix() * pinv.transpose();
  out.values = power.array().max(0.0).sqrt().matrix();
  return out;
}

double spectral_convergence(const AudioBuffer& audio, const MagnitudeGrid& mag) {
  const auto spec = stft_complex(audio.samples, mag.n_fft, mag.hop);
  if (static_cast<int>(spec.size()) != mag.frames()) throw std::invalid_argument("frame count mismatch");
  return convergence_error(spec, mag);
}

GriffinLimResult griffin_lim(const MagnitudeGrid& mag, int iterations, std::uint64_t seed,
                             std::optional<std::size_t> length) {
  if (iterations < 0) throw std::invalid_argument("invalid iteration count");
  const std::size_t len = length.value_or(static_cast<std::size_t>(std::max(0, mag.frames() - 1)) * mag.hop);
  if (stft_frames(len, mag.hop) != mag.frames()) throw std::invalid_argument("length inconsistent with frames");
  if (len < static_cast<std::size_t>(mag.n_fft)) throw std::invalid_argument("input too short");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::vector<std::vector<Complex>> target(static_cast<std::size_t>(mag.frames()),
                                           std::vector<Complex>(static_cast<std::size_t>(mag.bins())));
  for (int m = 0; m < mag.frames(); ++m) {
    for (int k = 0; k < mag.bins(); ++k) target[m][k] = std::polar(mag.values(m, k), phase(rng));
  }

  GriffinLimResult result;
  result.audio.sample_rate = mag.sample_rate;
  result.audio.samples = istft_least_squares(target, mag.n_fft, mag.hop, len);
  for (int it = 0;; ++it) {
    const auto spec = stft_complex(result.audio.samples, mag.n_fft, mag.hop);
    result.errors.push_back(convergence_error(spec, mag));
    if (it == iterations) break;
    for (int m = 0; m < mag.frames(); ++m) {
      for (int k = 0; k < mag.bins(); ++k) {
        const double a = std::abs(spec[m][k]);
        target[m][k] = a > 0.0 ? spec[m][k] * (mag.values(m, k) / a) : Complex(mag.values(m, k), 0.0);
      }
    }
    result.audio.samples = istft_least_squares(target, mag.n_fft, mag.hop, len);
  }
  return result;
}

}  // namespace foley::dsp
