#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "foley/audio.hpp"

namespace foley::dsp {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kMelScaleConstant = 2595.0;
inline constexpr double kLogFloor = 1e-5;

/// Per-frame STFT magnitudes, frames x (n_fft/2 + 1).
struct MagnitudeGrid {
  RowMatrix values;
  int n_fft = 0;
  int hop = 0;
  double sample_rate = kDefaultSampleRate;

  int frames() const { return static_cast<int>(values.rows()); }
  int bins() const { return static_cast<int>(values.cols()); }
};

/// Triangular mel filters, n_mels x bins, each row summing to one.
struct FilterBank {
  RowMatrix weights;
  double fmin = 0.0;
  double fmax = 0.0;
  double sample_rate = kDefaultSampleRate;
  int n_fft = 0;
  std::vector<double> centers_hz;

  int n_mels() const { return static_cast<int>(weights.rows()); }
  int bins() const { return static_cast<int>(weights.cols()); }
};

/// Log-mel energies, frames x mel bins.
struct MelSpectrogram {
  RowMatrix values;
  double frame_rate = 0.0;

  int frames() const { return static_cast<int>(values.rows()); }
  int n_mels() const { return static_cast<int>(values.cols()); }
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Periodic Hann window of length n.
std::vector<double> hann_window(int n);

// Reflection-padded index into a signal of length len (numpy "reflect" mode).
std::ptrdiff_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t len);

// Frame count produced by stft_magnitude for a signal of `length` samples.
inline int stft_frames(std::size_t length, int hop) { return static_cast<int>(length / hop) + 1; }

MagnitudeGrid stft_magnitude(const AudioBuffer& audio, int n_fft, int hop);

FilterBank mel_filterbank(int n_fft, int n_mels, double sample_rate, double fmin, double fmax);

MelSpectrogram log_mel(const MagnitudeGrid& mag, const FilterBank& fb, double floor_epsilon = kLogFloor);

/// Approximate inverse of log_mel: pinv(fb) * exp(mel), negatives clamped, then sqrt.
/// The hop is recovered from the mel frame rate.
MagnitudeGrid mel_to_magnitude(const MelSpectrogram& mel, const FilterBank& fb);

/// Relative spectral-convergence error ||STFT|x| - mag||_F / ||mag||_F, with the
/// Frobenius norm taken over the full (two-sided) spectrum.
double spectral_convergence(const AudioBuffer& audio, const MagnitudeGrid& mag);

struct GriffinLimResult {
  AudioBuffer audio;
  // errors[i] is the spectral convergence after i iterations (errors[0] is the random-phase start).
  std::vector<double> errors;
};

/// Classic Griffin-Lim with a least-squares inverse STFT. Output length defaults
/// to (frames - 1) * hop samples.
GriffinLimResult griffin_lim(const MagnitudeGrid& mag, int iterations, std::uint64_t seed,
                             std::optional<std::size_t> length = std::nullopt);

}  // namespace foley::dsp
