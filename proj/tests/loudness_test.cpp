#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "foley/loudness.hpp"
#include "oracles.hpp"

using namespace foley;
using namespace foley::loudness;

TEST(Rms, WorkedExample) {
  AudioBuffer a;
  a.samples = {1, 1, 1, 1, 3, 3, 3, 3};
  const auto r = rms_energy(a, 4, 2);
  ASSERT_EQ(r.values.size(), 3u);
  EXPECT_DOUBLE_EQ(r.values[0], 1.0);
  EXPECT_DOUBLE_EQ(r.values[1], std::sqrt(5.0));
  EXPECT_DOUBLE_EQ(r.values[2], 3.0);
}

TEST(Rms, MatchesDirectSummation) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const int win = std::uniform_int_distribution<int>(1, 300)(rng);
    const int hop = std::uniform_int_distribution<int>(1, win)(rng);
    const std::size_t len = std::uniform_int_distribution<std::size_t>(win, 3000)(rng);
    const auto x = oracle::random_signal(rng, len);
    const auto got = rms_energy(x, win, hop).values;
    const auto want = oracle::rms(x.samples, win, hop);
    ASSERT_EQ(got.size(), want.size()) << "win " << win << " hop " << hop << " len " << len;
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_LE(oracle::rel_err(got[i], want[i]), 1e-9);
  }
}

TEST(Rms, SilenceAndScaling) {
  AudioBuffer z;
  z.samples.assign(4000, 0.0);
  for (double v : rms_energy(z, 1024, 160).values) EXPECT_EQ(v, 0.0);

  std::mt19937_64 rng(3);
  const auto x = oracle::random_signal(rng, 5000);
  AudioBuffer y = x;
  for (auto& s : y.samples) s *= -0.37;
  const auto rx = rms_energy(x, 512, 128).values;
  const auto ry = rms_energy(y, 512, 128).values;
  for (std::size_t i = 0; i < rx.size(); ++i) EXPECT_NEAR(ry[i], 0.37 * rx[i], 1e-12);
}

TEST(Rms, Errors) {
  AudioBuffer a;
  a.samples.assign(100, 0.1);
  EXPECT_THROW(rms_energy(a, 101, 10), std::invalid_argument);
  EXPECT_THROW(rms_energy(a, 10, 0), std::invalid_argument);
  EXPECT_THROW(rms_energy(a, 0, 1), std::invalid_argument);
}

TEST(Pool, MatchesSegmentMeans) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int len = std::uniform_int_distribution<int>(1, 800)(rng);
    const int n = std::uniform_int_distribution<int>(1, len)(rng);
    std::vector<double> x(len);
    for (auto& v : x) v = u(rng);
    const auto got = adaptive_average_pool(x, n);
    const auto want = oracle::pool(x, n);
    ASSERT_EQ(got.size(), want.size());
    for (int i = 0; i < n; ++i) EXPECT_LE(oracle::rel_err(got[i], want[i]), 1e-9);
  }
}

TEST(Pool, ExactDivisionKeepsMean) {
  std::vector<double> x(120);
  std::iota(x.begin(), x.end(), 0.0);
  const auto p = adaptive_average_pool(x, 12);
  double a = 0, b = 0;
  for (double v : x) a += v / x.size();
  for (double v : p) b += v / p.size();
  EXPECT_NEAR(a, b, 1e-12);
  EXPECT_DOUBLE_EQ(p[0], 4.5);
}

TEST(Pool, Errors) {
  EXPECT_THROW(adaptive_average_pool({1.0, 2.0}, 0), std::invalid_argument);
  EXPECT_THROW(adaptive_average_pool({1.0, 2.0}, 3), std::invalid_argument);
}

TEST(Kernel, ThreeTapValues) {
  const auto k = gaussian_kernel(3, 3.5);
  ASSERT_EQ(k.size(), 3u);
  // e^{-1/24.5} = 0.9600054; taps e / (1 + 2e) and 1 / (1 + 2e)
  EXPECT_NEAR(k[0], 0.3287678, 1e-7);
  EXPECT_NEAR(k[1], 0.3424645, 1e-7);
  EXPECT_NEAR(k[2], 0.3287678, 1e-7);
  const double e = std::exp(-1.0 / 24.5);
  EXPECT_NEAR(k[1], 1.0 / (1.0 + 2.0 * e), 1e-15);
  EXPECT_NEAR(k[0] + k[1] + k[2], 1.0, 1e-15);
}

TEST(Kernel, Errors) {
  EXPECT_THROW(gaussian_kernel(4, 1.0), std::invalid_argument);
  EXPECT_THROW(gaussian_kernel(3, 0.0), std::invalid_argument);
  EXPECT_THROW(gaussian_kernel(3, -1.0), std::invalid_argument);
}

TEST(Smooth, MatchesDirectConvolution) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int len = std::uniform_int_distribution<int>(1, 200)(rng);
    const int win = 2 * std::uniform_int_distribution<int>(0, 5)(rng) + 1;
    const double sigma = std::uniform_real_distribution<double>(0.3, 6.0)(rng);
    std::vector<double> x(len);
    for (auto& v : x) v = u(rng);
    const auto got = ewma_smooth(x, win, sigma);
    const auto want = oracle::smooth(x, win, sigma);
    for (int i = 0; i < len; ++i) EXPECT_LE(oracle::rel_err(got[i], want[i]), 1e-9);
  }
}

TEST(Smooth, ConstantsAndBounds) {
  const std::vector<double> c(17, 0.42);
  for (double v : ewma_smooth(c, 5, 2.0)) EXPECT_NEAR(v, 0.42, 1e-15);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  std::vector<double> x(50);
  for (auto& v : x) v = u(rng);
  const auto y = ewma_smooth(x, 3, 3.5);
  EXPECT_LE(*std::max_element(y.begin(), y.end()), *std::max_element(x.begin(), x.end()) + 1e-12);
  EXPECT_GE(*std::min_element(y.begin(), y.end()), *std::min_element(x.begin(), x.end()) - 1e-12);
}

TEST(Pipeline, EightSecondsGiveEightyValues) {
  const auto clip = oracle::sine(440.0, 8.0, 0.5);
  ASSERT_EQ(clip.size(), 128000u);
  const auto curve = loudness_pipeline(clip, PipelineConfig{1024, 160, 10.0, 3, 3.5});
  EXPECT_EQ(curve.values.size(), 80u);
  EXPECT_EQ(curve.rate, 10.0);
}

TEST(Pipeline, EqualsComposedOracles) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const double secs = std::uniform_real_distribution<double>(1.0, 4.0)(rng);
    const auto x = oracle::random_signal(rng, static_cast<std::size_t>(secs * 16000));
    const auto got = loudness_pipeline(x).values;
    const int n = curve_length(x.seconds(), 10.0);
    const auto want = oracle::smooth(oracle::pool(oracle::rms(x.samples, 1024, 160), n), 3, 3.5);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_LE(oracle::rel_err(got[i], want[i]), 1e-9);
  }
}

TEST(Pipeline, FadeInIsIncreasing) {
  auto clip = oracle::sine(500.0, 2.0);
  for (std::size_t i = 0; i < clip.size(); ++i) clip.samples[i] *= static_cast<double>(i) / clip.size();
  const auto c = loudness_pipeline(clip).values;
  ASSERT_EQ(c.size(), 20u);
  for (std::size_t i = 2; i + 2 < c.size(); ++i) EXPECT_GT(c[i + 1], c[i]);
}

TEST(Pipeline, NonNegative) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    for (double v : loudness_pipeline(oracle::random_signal(rng, 20000)).values) EXPECT_GE(v, 0.0);
  }
}
