#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "foley/diffusion.hpp"

using namespace foley;
using namespace foley::diffusion;

namespace {

Latent scalar(double v) {
  Latent z(1, 1);
  z.values(0) = v;
  return z;
}

Latent random_latent(std::mt19937_64& rng, int h = 4, int w = 8) {
  return standard_normal_like(Latent(h, w), rng);
}

}  // namespace

TEST(Schedule, SingleStep) {
  const auto s = make_schedule(1, 0.1, 0.1);
  EXPECT_NEAR(s.alpha_cum(1), 0.9, 1e-15);
  EXPECT_EQ(s.alpha_cum(0), 1.0);
}

TEST(Schedule, ThousandStepProduct) {
  const auto s = make_schedule(1000, 1e-4, 0.02);
  double prod = 1.0;
  for (int t = 1; t <= 1000; ++t) prod *= 1.0 - (1e-4 + (t - 1) / 999.0 * (0.02 - 1e-4));
  EXPECT_NEAR(s.alpha_cum(1000), prod, 1e-15);
  EXPECT_NEAR(s.alpha_cum(1000), 4.04e-5, 0.01e-5);
}

TEST(Schedule, IdentityAndMonotone) {
  for (int steps : {1, 2, 100, 1000}) {
    const auto s = make_schedule(steps, 1e-4, steps == 1 ? 1e-4 : 0.02);
    for (int t = 1; t <= steps; ++t) {
      EXPECT_NEAR(s.alpha_cum(t), s.alpha_cum(t - 1) * (1.0 - s.beta(t)), 1e-12);
      EXPECT_LT(s.alpha_cum(t), s.alpha_cum(t - 1));
      EXPECT_GT(s.alpha_cum(t), 0.0);
      if (t > 1) EXPECT_GT(s.beta(t), s.beta(t - 1));
    }
  }
}

TEST(Schedule, Errors) {
  EXPECT_THROW(make_schedule(10, 0.0, 0.02), std::invalid_argument);
  EXPECT_THROW(make_schedule(10, 0.03, 0.02), std::invalid_argument);
  EXPECT_THROW(make_schedule(10, 0.01, 1.0), std::invalid_argument);
  EXPECT_THROW(make_schedule(0, 0.01, 0.02), std::invalid_argument);
}

TEST(QSample, Examples) {
  const auto s = NoiseSchedule::from_betas({0.75});
  EXPECT_NEAR(q_sample(scalar(2.0), 1, scalar(1.0), s).values(0), 0.5 * 2 + std::sqrt(0.75), 1e-12);
  EXPECT_NEAR(q_sample(scalar(2.0), 1, scalar(1.0), s).values(0), 1.86603, 1e-5);
  EXPECT_NEAR(q_sample(scalar(2.0), 1, scalar(0.0), s).values(0), 1.0, 1e-15);
  EXPECT_THROW(q_sample(Latent(2, 2), 1, Latent(2, 3), s), std::invalid_argument);
}

TEST(QSample, Linear) {
  std::mt19937_64 rng(1);
  const auto s = make_schedule(100, 1e-4, 0.02);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_latent(rng), b = random_latent(rng), e1 = random_latent(rng), e2 = random_latent(rng);
    const int t = 1 + trial * 4;
    Latent ab = a, ee = e1;
    ab.values = 2.0 * a.values - 0.5 * b.values;
    ee.values = 2.0 * e1.values - 0.5 * e2.values;
    const Eigen::ArrayXd lhs = q_sample(ab, t, ee, s).values;
    const Eigen::ArrayXd rhs = 2.0 * q_sample(a, t, e1, s).values - 0.5 * q_sample(b, t, e2, s).values;
    EXPECT_LE((lhs - rhs).abs().maxCoeff(), 1e-12);
  }
}

TEST(QSample, MonteCarloMoments) {
  std::mt19937_64 rng(2);
  const auto s = make_schedule(1000, 1e-4, 0.02);
  const auto z0 = random_latent(rng, 2, 4);
  const int n = 10000;
  const double ab = s.alpha_cum(1000);
  Eigen::ArrayXd sum = Eigen::ArrayXd::Zero(z0.size()), sq = sum;
  for (int i = 0; i < n; ++i) {
    const auto z = q_sample(z0, 1000, standard_normal_like(z0, rng), s);
    sum += z.values;
    sq += z.values.square();
  }
  const Eigen::ArrayXd mean = sum / n;
  const Eigen::ArrayXd var = sq / n - mean.square();
  for (Eigen::Index i = 0; i < z0.size(); ++i) {
    EXPECT_LE(std::abs(mean(i) - std::sqrt(ab) * z0.values(i)), 4.0 * std::sqrt((1 - ab) / n));
    EXPECT_LE(std::abs(var(i) / (1 - ab) - 1.0), 0.05);
  }
}

TEST(Ddpm, ScalarMean) {
  // beta_2 = 0.02 and abar_2 = 0.5
  const auto s = NoiseSchedule::from_betas({1.0 - 0.5 / 0.98, 0.02});
  ASSERT_NEAR(s.alpha_cum(2), 0.5, 1e-15);
  const double mu = ddpm_step(scalar(1.0), 2, scalar(1.0), s, scalar(0.0)).values(0);
  EXPECT_NEAR(mu, (1 / std::sqrt(0.98)) * (1 - 0.02 / std::sqrt(0.5)), 1e-12);
  EXPECT_NEAR(mu, 0.981581, 1e-6);

  const double sigma2 = (1 - s.alpha_cum(1)) / (1 - s.alpha_cum(2)) * 0.02;
  EXPECT_NEAR(ddpm_step(scalar(1.0), 2, scalar(1.0), s, scalar(1.0)).values(0), mu + std::sqrt(sigma2), 1e-12);
}

TEST(Ddpm, FinalStepIgnoresNoise) {
  const auto s = make_schedule(10, 1e-4, 0.02);
  EXPECT_EQ(ddpm_step(scalar(0.3), 1, scalar(-0.2), s, scalar(5.0)).values(0),
            ddpm_step(scalar(0.3), 1, scalar(-0.2), s, scalar(0.0)).values(0));
  EXPECT_THROW(ddpm_step(scalar(0.3), 0, scalar(0), s, scalar(0)), std::invalid_argument);
  EXPECT_THROW(ddpm_step(scalar(0.3), 11, scalar(0), s, scalar(0)), std::invalid_argument);
}

TEST(Ddim, RoundTripThousandTrials) {
  std::mt19937_64 rng(3);
  const auto s = make_schedule(1000, 1e-4, 0.02);
  std::uniform_int_distribution<int> pick(1, 1000);
  std::normal_distribution<double> n01;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int t = pick(rng);
    const int t_prev = std::uniform_int_distribution<int>(0, t - 1)(rng);
    const auto z0 = scalar(n01(rng)), eps = scalar(n01(rng));
    const auto zt = q_sample(z0, t, eps, s);
    const auto got = ddim_step(zt, t, t_prev, eps, s).values(0);
    const double want = t_prev == 0 ? z0.values(0) : q_sample(z0, t_prev, eps, s).values(0);
    worst = std::max(worst, std::abs(got - want));
  }
  EXPECT_LE(worst, 1e-9);
}

TEST(Ddim, ErrorsAndDeterminism) {
  const auto s = make_schedule(10, 1e-4, 0.02);
  EXPECT_THROW(ddim_step(scalar(0), 3, 3, scalar(0), s), std::invalid_argument);
  EXPECT_THROW(ddim_step(scalar(0), 3, 5, scalar(0), s), std::invalid_argument);
  std::mt19937_64 rng(4);
  const auto z = random_latent(rng), e = random_latent(rng);
  EXPECT_EQ((ddim_step(z, 7, 2, e, s).values - ddim_step(z, 7, 2, e, s).values).abs().maxCoeff(), 0.0);
}

TEST(DualCfg, Identities) {
  std::mt19937_64 rng(5);
  const auto u = random_latent(rng), t = random_latent(rng), f = random_latent(rng);
  EXPECT_TRUE((dual_cfg(u, t, f, {0.0, 0.0}).values == u.values).all());
  EXPECT_TRUE((dual_cfg(u, t, f, {0.0, 1.0}).values == f.values).all());
  EXPECT_TRUE((dual_cfg(u, t, f, {1.0, 0.0}).values == t.values).all());
  EXPECT_EQ(dual_cfg(scalar(0), scalar(1), scalar(2), {3.5, 4.5}).values(0), 12.5);
  // With s_text = 0 it is ordinary single-condition guidance.
  const auto single = dual_cfg(u, t, f, {0.0, 2.5});
  EXPECT_LE((single.values - (u.values + 2.5 * (f.values - u.values))).abs().maxCoeff(), 1e-12);
  EXPECT_THROW(dual_cfg(u, Latent(1, 1), f, {}), std::invalid_argument);
}

TEST(DualCfg, LinearInEachInput) {
  std::mt19937_64 rng(6);
  const GuidanceScales g{3.5, 4.5};
  for (int trial = 0; trial < 10; ++trial) {
    const auto u = random_latent(rng), t = random_latent(rng), f = random_latent(rng), d = random_latent(rng);
    const auto base = dual_cfg(u, t, f, g).values;
    Latent u2 = u, t2 = t, f2 = f;
    u2.values += d.values;
    t2.values += d.values;
    f2.values += d.values;
    EXPECT_LE((dual_cfg(u2, t, f, g).values - base - (1 - 3.5 - 4.5) * d.values).abs().maxCoeff(), 1e-12);
    EXPECT_LE((dual_cfg(u, t2, f, g).values - base - 3.5 * d.values).abs().maxCoeff(), 1e-12);
    EXPECT_LE((dual_cfg(u, t, f2, g).values - base - 4.5 * d.values).abs().maxCoeff(), 1e-12);
  }
}

TEST(Subset, EvenlySpacedAndDecreasing) {
  const auto ts = timestep_subset(1000, 25);
  ASSERT_EQ(ts.size(), 25u);
  EXPECT_EQ(ts.front(), 1000);
  EXPECT_GE(ts.back(), 1);
  for (std::size_t i = 1; i < ts.size(); ++i) EXPECT_EQ(ts[i - 1] - ts[i], 40);
  EXPECT_EQ(timestep_subset(10, 10).back(), 1);
  EXPECT_THROW(timestep_subset(10, 11), std::invalid_argument);
}

TEST(Sample, DdimDeterministic) {
  const auto s = make_schedule(1000, 1e-4, 0.02);
  const EpsPredictor model = [](const Latent& z, int t, const cond::ConditionSet& c) {
    Latent out = z;
    out.values = 0.3 * z.values.sin() + 0.001 * t + (c.text ? 0.1 : 0.0);
    return out;
  };
  SampleOptions opts;
  opts.seed = 9;
  cond::ConditionSet c;
  c.text = 1;
  const auto a = sample(model, c, s, 4, 8, opts);
  const auto b = sample(model, c, s, 4, 8, opts);
  EXPECT_LE((a.values - b.values).abs().maxCoeff(), 1e-12);
  EXPECT_TRUE(a.values.allFinite());
  opts.steps = 1001;
  EXPECT_THROW(sample(model, c, s, 4, 8, opts), std::invalid_argument);
}

TEST(Sample, OneDdimStepWithZeroModel) {
  const auto s = make_schedule(1000, 1e-4, 0.02);
  const EpsPredictor zero = [](const Latent& z, int, const cond::ConditionSet&) { return Latent(z.height, z.width); };
  SampleOptions opts;
  opts.steps = 1;
  opts.seed = 17;
  const auto out = sample(zero, {}, s, 2, 4, opts);
  std::mt19937_64 rng(17);
  const auto zT = standard_normal_like(Latent(2, 4), rng);
  EXPECT_LE((out.values - zT.values / std::sqrt(s.alpha_cum(1000))).abs().maxCoeff(), 1e-9);
}

TEST(Sample, GuidanceBranchesSeeNulledSlots) {
  const auto s = make_schedule(50, 1e-4, 0.02);
  std::vector<std::pair<bool, bool>> seen;
  const EpsPredictor spy = [&](const Latent& z, int, const cond::ConditionSet& c) {
    EXPECT_TRUE(c.signal.has_value());
    seen.emplace_back(c.text.has_value(), c.visual.has_value());
    return Latent(z.height, z.width);
  };
  cond::ConditionSet c;
  c.text = 0;
  c.visual = cond::VisualCondition{cond::RowMatrix::Zero(8, 32), cond::RowMatrix::Zero(8, 32)};
  c.signal = loudness::LoudnessCurve{std::vector<double>(20, 0.1), 10.0};
  SampleOptions opts;
  opts.steps = 2;
  sample(spy, c, s, 2, 4, opts);
  ASSERT_EQ(seen.size(), 6u);
  for (int step = 0; step < 2; ++step) {
    EXPECT_EQ(seen[3 * step + 0], std::make_pair(false, false));
    EXPECT_EQ(seen[3 * step + 1], std::make_pair(true, false));
    EXPECT_EQ(seen[3 * step + 2], std::make_pair(true, true));
  }
}

TEST(Sample, AncestralWithTrueEpsRecoversTarget) {
  const auto s = make_schedule(100, 1e-4, 0.02);
  std::mt19937_64 rng(12);
  const auto z0 = random_latent(rng);
  // The exact noise consistent with z0 at every visited state.
  const EpsPredictor oracle_eps = [&](const Latent& z, int t, const cond::ConditionSet&) {
    Latent e = z;
    e.values = (z.values - std::sqrt(s.alpha_cum(t)) * z0.values) / std::sqrt(1 - s.alpha_cum(t));
    return e;
  };
  SampleOptions opts;
  opts.steps = 100;
  opts.sampler = Sampler::kDdpm;
  opts.seed = 5;
  const auto out = sample(oracle_eps, {}, s, 4, 8, opts);
  EXPECT_LE(std::sqrt((out.values - z0.values).square().mean()), 0.05);
}
