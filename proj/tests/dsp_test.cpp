#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "foley/dsp.hpp"
#include "oracles.hpp"

using namespace foley;
using namespace foley::dsp;

namespace {

std::vector<double> padded_frame(const std::vector<double>& x, int m, int n_fft, int hop) {
  std::vector<double> f(n_fft);
  const std::ptrdiff_t len = static_cast<std::ptrdiff_t>(x.size());
  for (int i = 0; i < n_fft; ++i) {
    std::ptrdiff_t j = static_cast<std::ptrdiff_t>(m) * hop - n_fft / 2 + i;
    while (j < 0 || j >= len) j = j < 0 ? -j : 2 * (len - 1) - j;
    f[i] = x[j];
  }
  return f;
}

}  // namespace

TEST(Stft, ZeroSignal) {
  AudioBuffer z;
  z.samples.assign(4000, 0.0);
  const auto g = stft_magnitude(z, 256, 64);
  EXPECT_EQ(g.frames(), stft_frames(4000, 64));
  EXPECT_EQ(g.values.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Stft, BinCenteredSineMatchesDft) {
  const int n_fft = 256, hop = 64, k = 12;
  const auto x = oracle::sine(k * 16000.0 / n_fft, 0.25);
  const auto g = stft_magnitude(x, n_fft, hop);
  for (int m = 3; m < g.frames() - 3; ++m) {
    const auto want = oracle::dft_magnitude(padded_frame(x.samples, m, n_fft, hop));
    Eigen::Index peak;
    g.values.row(m).maxCoeff(&peak);
    EXPECT_EQ(peak, k);
    EXPECT_LE(oracle::rel_err(g.values(m, k), want[k]), 1e-6);
    for (int b = 0; b <= n_fft / 2; ++b) EXPECT_NEAR(g.values(m, b), want[b], 1e-6 * want[k]);
  }
}

TEST(Stft, ReflectPaddedFramesMatchDft) {
  std::mt19937_64 rng(1);
  const auto x = oracle::random_signal(rng, 1000);
  const auto g = stft_magnitude(x, 128, 100);
  for (int m : {0, 1, g.frames() / 2, g.frames() - 1}) {
    const auto want = oracle::dft_magnitude(padded_frame(x.samples, m, 128, 100));
    for (int b = 0; b <= 64; ++b) EXPECT_LE(oracle::rel_err(g.values(m, b), want[b]), 1e-6);
  }
}

TEST(Stft, Parseval) {
  std::mt19937_64 rng(2);
  const int n_fft = 512, hop = 128;
  const auto x = oracle::random_signal(rng, 16000);
  const auto g = stft_magnitude(x, n_fft, hop);
  const auto w = hann_window(n_fft);
  for (int m = 0; m < g.frames(); m += 7) {
    const auto f = padded_frame(x.samples, m, n_fft, hop);
    double time_energy = 0.0;
    for (int i = 0; i < n_fft; ++i) time_energy += (w[i] * f[i]) * (w[i] * f[i]);
    double freq_energy = g.values(m, 0) * g.values(m, 0) + g.values(m, n_fft / 2) * g.values(m, n_fft / 2);
    for (int b = 1; b < n_fft / 2; ++b) freq_energy += 2.0 * g.values(m, b) * g.values(m, b);
    EXPECT_LE(oracle::rel_err(freq_energy / n_fft, time_energy), 1e-6);
  }
}

TEST(Stft, SignFlipInvariant) {
  std::mt19937_64 rng(3);
  auto x = oracle::random_signal(rng, 3000);
  const auto a = stft_magnitude(x, 256, 80);
  for (auto& s : x.samples) s = -s;
  const auto b = stft_magnitude(x, 256, 80);
  EXPECT_LE((a.values - b.values).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Stft, Errors) {
  AudioBuffer a;
  a.samples.assign(100, 0.0);
  EXPECT_THROW(stft_magnitude(a, 256, 64), std::invalid_argument);
  a.samples.assign(1000, 0.0);
  EXPECT_THROW(stft_magnitude(a, 256, 0), std::invalid_argument);
}

TEST(Mel, ScaleValues) {
  EXPECT_NEAR(hz_to_mel(700.0), 2595.0 * std::log10(2.0), 1e-9);
  EXPECT_NEAR(hz_to_mel(700.0), 781.1728, 1e-4);
  EXPECT_EQ(hz_to_mel(0.0), 0.0);
  EXPECT_NEAR(mel_to_hz(hz_to_mel(1234.5)), 1234.5, 1e-9);
}

TEST(Mel, SingleFilter) {
  const auto fb = mel_filterbank(512, 1, 16000.0, 0.0, 8000.0);
  ASSERT_EQ(fb.n_mels(), 1);
  EXPECT_NEAR(fb.weights.row(0).sum(), 1.0, 1e-12);
  const double center_hz = mel_to_hz(hz_to_mel(8000.0) / 2.0);
  Eigen::Index peak;
  fb.weights.row(0).maxCoeff(&peak);
  EXPECT_NEAR(peak * 16000.0 / 512, center_hz, 16000.0 / 512);
  // Direct construction of the same triangle, area-normalized.
  std::vector<double> tri(fb.bins());
  double area = 0.0;
  for (int k = 0; k < fb.bins(); ++k) {
    const double f = k * 16000.0 / 512;
    tri[k] = f < center_hz ? f / center_hz : (8000.0 - f) / (8000.0 - center_hz);
    tri[k] = std::max(0.0, tri[k]);
    area += tri[k];
  }
  for (int k = 0; k < fb.bins(); ++k) EXPECT_NEAR(fb.weights(0, k), tri[k] / area, 1e-9);
}

TEST(Mel, RowsSumToOne) {
  for (int n_mels : {4, 16, 40}) {
    const auto fb = mel_filterbank(1024, n_mels, 16000.0, 0.0, 8000.0);
    for (int m = 0; m < n_mels; ++m) EXPECT_NEAR(fb.weights.row(m).sum(), 1.0, 1e-9);
    EXPECT_GE(fb.weights.minCoeff(), 0.0);
  }
}

TEST(Mel, Errors) {
  EXPECT_THROW(mel_filterbank(1024, 16, 16000.0, 0.0, 9000.0), std::invalid_argument);
  EXPECT_THROW(mel_filterbank(1024, 16, 16000.0, 500.0, 400.0), std::invalid_argument);
  EXPECT_THROW(mel_filterbank(1024, 0, 16000.0, 0.0, 8000.0), std::invalid_argument);
  EXPECT_THROW(mel_filterbank(16, 40, 16000.0, 0.0, 8000.0), std::invalid_argument);
}

TEST(LogMel, FloorAndDoubling) {
  const auto fb = mel_filterbank(256, 8, 16000.0, 0.0, 8000.0);
  MagnitudeGrid g;
  g.n_fft = 256;
  g.hop = 64;
  g.values = RowMatrix::Zero(5, 129);
  const auto floor = log_mel(g, fb);
  for (double v : floor.values.reshaped()) EXPECT_NEAR(v, std::log(1e-5), 1e-12);
  EXPECT_NEAR(std::log(1e-5), -11.5129, 1e-4);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (auto& v : g.values.reshaped()) v = u(rng);
  const auto base = log_mel(g, fb);
  g.values *= 2.0;
  const auto doubled = log_mel(g, fb);
  EXPECT_LE((doubled.values - base.values).array().abs().maxCoeff() - std::log(4.0), 1e-9);
  EXPECT_GE((doubled.values - base.values).array().abs().minCoeff() - std::log(4.0), -1e-9);
}

TEST(LogMel, MatchesProductThenLog) {
  const auto fb = mel_filterbank(256, 8, 16000.0, 0.0, 8000.0);
  std::mt19937_64 rng(5);
  const auto x = oracle::random_signal(rng, 2000);
  const auto g = stft_magnitude(x, 256, 64);
  const auto s = log_mel(g, fb);
  for (int m = 0; m < g.frames(); ++m) {
    for (int j = 0; j < 8; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 129; ++k) acc += fb.weights(j, k) * g.values(m, k) * g.values(m, k);
      EXPECT_NEAR(s.values(m, j), std::log(std::max(acc, 1e-5)), 1e-9);
    }
  }
}

TEST(LogMel, Monotone) {
  const auto fb = mel_filterbank(256, 8, 16000.0, 0.0, 8000.0);
  std::mt19937_64 rng(6);
  const auto g = stft_magnitude(oracle::random_signal(rng, 2000), 256, 64);
  const auto base = log_mel(g, fb);
  std::uniform_int_distribution<int> fr(0, g.frames() - 1), bin(0, 128);
  for (int trial = 0; trial < 50; ++trial) {
    auto h = g;
    h.values(fr(rng), bin(rng)) += 0.5;
    EXPECT_GE((log_mel(h, fb).values - base.values).minCoeff(), 0.0);
  }
}

TEST(MelInverse, RoundTripOnRowSpace) {
  const auto fb = mel_filterbank(1024, 16, 16000.0, 0.0, 4000.0);
  MelSpectrogram s;
  s.frame_rate = 16000.0 / 504;
  s.values.resize(6, 16);
  for (int m = 0; m < 6; ++m) {
    Eigen::VectorXd a(16);
    for (int j = 0; j < 16; ++j) a(j) = 1.0 + 0.5 * std::sin(0.3 * j + m);
    s.values.row(m) = (fb.weights * fb.weights.transpose() * a).array().log().matrix().transpose();
  }
  const auto mag = mel_to_magnitude(s, fb);
  EXPECT_EQ(mag.hop, 504);
  EXPECT_LE((log_mel(mag, fb).values - s.values).cwiseAbs().maxCoeff(), 0.1);
}

TEST(MelInverse, FloorGivesNearSilence) {
  const auto fb = mel_filterbank(1024, 16, 16000.0, 0.0, 4000.0);
  MelSpectrogram s;
  s.frame_rate = 16000.0 / 504;
  s.values = RowMatrix::Constant(4, 16, std::log(1e-5));
  // The min-norm pseudo-inverse of a constant 1e-5 mel frame is not flat across bins;
  // its largest bin reaches power 1.281e-5 (independent numpy pinv evaluation).
  const auto mag = mel_to_magnitude(s, fb);
  EXPECT_NEAR(mag.values.maxCoeff(), 0.0035792, 1e-6);
  EXPECT_GE(mag.values.minCoeff(), 0.0);
}

TEST(MelInverse, NegativePowerIsClampedToZero) {
  FilterBank fb;
  fb.n_fft = 4;
  fb.sample_rate = 16000.0;
  fb.weights.resize(2, 3);
  fb.weights << 0.5, 0.5, 0.0, 0.0, 0.5, 0.5;
  MelSpectrogram s;
  s.frame_rate = 16000.0 / 2;
  s.values.resize(1, 2);
  s.values << std::log(1.0), std::log(0.01);
  // pinv image: [4/3 - 2/3 e, 2/3 (1 + e), -2/3 + 4/3 e] with e = 0.01
  const auto mag = mel_to_magnitude(s, fb);
  EXPECT_EQ(mag.values(0, 2), 0.0);
  EXPECT_NEAR(mag.values(0, 0), std::sqrt(4.0 / 3 - 2.0 / 3 * 0.01), 1e-9);
}

TEST(GriffinLim, ZeroAndDeterminism) {
  MagnitudeGrid z;
  z.n_fft = 256;
  z.hop = 64;
  z.values = RowMatrix::Zero(stft_frames(2048, 64), 129);
  const auto r = griffin_lim(z, 4, 1, 2048);
  EXPECT_EQ(Eigen::Map<const Eigen::VectorXd>(r.audio.samples.data(), 2048).cwiseAbs().maxCoeff(), 0.0);

  std::mt19937_64 rng(7);
  const auto mag = stft_magnitude(oracle::random_signal(rng, 4000), 256, 64);
  const auto a = griffin_lim(mag, 8, 42, 4000);
  const auto b = griffin_lim(mag, 8, 42, 4000);
  EXPECT_EQ(a.audio.samples, b.audio.samples);
  EXPECT_EQ(a.audio.samples.size(), 4000u);
}

TEST(GriffinLim, ErrorDecreasesMonotonically) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 4; ++trial) {
    // A tonal clip with a noisy onset stands in for a recording.
    auto clip = oracle::sine(200.0 + 300.0 * u(rng), 1.0, 0.5);
    for (std::size_t i = 0; i < clip.size(); ++i) {
      clip.samples[i] += 0.3 * std::sin(2 * 3.14159265 * 1234.0 * i / 16000.0) * i / clip.size();
      if (i < 3000) clip.samples[i] += 0.2 * (u(rng) - 0.5);
    }
    const auto mag = stft_magnitude(clip, 1024, 504);
    const auto r = griffin_lim(mag, 32, 100 + trial, clip.size());
    ASSERT_EQ(r.errors.size(), 33u);
    for (std::size_t i = 1; i < r.errors.size(); ++i) EXPECT_LE(r.errors[i], r.errors[i - 1] * (1 + 1e-9));
    EXPECT_LT(r.errors.back(), r.errors.front());
    EXPECT_NEAR(spectral_convergence(r.audio, mag), r.errors.back(), 1e-9);
  }
}

TEST(Mix, Identities) {
  std::mt19937_64 rng(9);
  auto x = oracle::random_signal(rng, 1000);
  for (auto& s : x.samples) s *= 0.4;
  EXPECT_EQ(mix_audio({x}).samples, x.samples);
  AudioBuffer neg = x;
  for (auto& s : neg.samples) s = -s;
  for (double v : mix_audio({x, neg}).samples) EXPECT_EQ(v, 0.0);

  AudioBuffer c;
  c.samples.assign(100, 0.8);
  for (double v : mix_audio({c, c}).samples) EXPECT_EQ(v, 1.0);
}

TEST(Mix, CommutativeAndAssociativeWithoutClipping) {
  std::mt19937_64 rng(10);
  auto a = oracle::random_signal(rng, 500), b = oracle::random_signal(rng, 700), c = oracle::random_signal(rng, 300);
  for (auto* buf : {&a, &b, &c})
    for (auto& s : buf->samples) s *= 0.3;
  EXPECT_EQ(mix_audio({a, b}).samples, mix_audio({b, a}).samples);
  const auto l = mix_audio({mix_audio({a, b}), c}).samples;
  const auto r = mix_audio({a, mix_audio({b, c})}).samples;
  ASSERT_EQ(l.size(), 700u);
  for (std::size_t i = 0; i < l.size(); ++i) EXPECT_NEAR(l[i], r[i], 1e-15);
  EXPECT_THROW(mix_audio({}), std::invalid_argument);
  AudioBuffer other = a;
  other.sample_rate = 8000;
  EXPECT_THROW(mix_audio({a, other}), std::invalid_argument);
}
