#pragma once

#include <vector>

#include <Eigen/Dense>

#include "foley/audio.hpp"
#include "foley/config.hpp"
#include "foley/dsp.hpp"
#include "foley/loudness.hpp"

namespace foley::metrics {

struct GaussianStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Sample mean and unbiased covariance of the rows of `features`.
GaussianStats gaussian_stats(const Eigen::MatrixXd& features);

/// ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^{1/2}), clamped at 0.
double frechet_distance(const GaussianStats& a, const GaussianStats& b);

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q);

/// exp(mean_i KL(row_i || marginal)).
double inception_score(const Eigen::MatrixXd& class_distributions);

double scaled_cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double gamma = 100.0);

/// Pearson r between two curves of equal length.
double pearson(const std::vector<double>& a, const std::vector<double>& b);

/// Recomputes the loudness curve of `audio` and correlates it with `target`.
double envelope_correlation(const AudioBuffer& audio, const loudness::LoudnessCurve& target,
                            const loudness::PipelineConfig& cfg);

/// Inclusive range of mel bins.
struct Band {
  int first = 0;
  int last = 0;
};

/// Mel bins whose filter support touches a class fundamental's main lobe,
/// assigned to the nearest fundamental.
std::vector<Band> class_bands(const dsp::FilterBank& fb, const std::vector<double>& fundamentals_hz);
std::vector<Band> class_bands(const FoleyConfig& cfg);

struct Classification {
  int class_id = 0;
  std::vector<double> distribution;
};

/// Softmax over classes of log band energy (exp-mel averaged over the band's bins,
/// so an all-floor spectrogram gives a uniform distribution).
Classification band_energy_classify(const dsp::MelSpectrogram& spec, const std::vector<Band>& bands);

/// Per-clip feature vector for FD: band distribution, then mean and std of the loudness curve.
Eigen::VectorXd clip_features(const dsp::MelSpectrogram& spec, const std::vector<Band>& bands,
                              const loudness::LoudnessCurve& curve);

}  // namespace foley::metrics
