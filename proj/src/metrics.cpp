#include "foley/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace foley::metrics {
namespace {

constexpr double kPsdTol = 1e-9;

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw std::invalid_argument("invalid covariance");
  Eigen::VectorXd ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -kPsdTol * std::max(1.0, ev.cwiseAbs().maxCoeff())) throw std::invalid_argument("invalid covariance");
    ev(i) = std::sqrt(std::max(ev(i), 0.0));
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

void check_cov(const Eigen::MatrixXd& c) {
  if (c.rows() != c.cols()) throw std::invalid_argument("invalid covariance");
  if ((c - c.transpose()).cwiseAbs().maxCoeff() > kPsdTol * std::max(1.0, c.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("invalid covariance");
}

void check_distribution(const std::vector<double>& p) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("invalid distribution");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("invalid distribution");
}

}  // namespace

GaussianStats gaussian_stats(const Eigen::MatrixXd& features) {
  if (features.rows() < 2) throw std::invalid_argument("need at least two samples");
  GaussianStats s;
  s.mean = features.colwise().mean().transpose();
  const Eigen::MatrixXd centered = features.rowwise() - s.mean.transpose();
  s.cov = centered.transpose() * centered / static_cast<double>(features.rows() - 1);
  return s;
}

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  const auto d = a.mean.size();
  if (b.mean.size() != d || a.cov.rows() != d || b.cov.rows() != d) throw std::invalid_argument("dimension mismatch");
  check_cov(a.cov);
  check_cov(b.cov);
  const Eigen::MatrixXd ra = psd_sqrt(a.cov);
  // Tr (S_a S_b)^{1/2} = Tr (S_a^{1/2} S_b S_a^{1/2})^{1/2}
  const Eigen::MatrixXd cross = psd_sqrt(ra * b.cov * ra);
  const double fd = (a.mean - b.mean).squaredNorm() + a.cov.trace() + b.cov.trace() - 2.0 * cross.trace();
  if (fd < -1e-6) throw std::invalid_argument("invalid covariance");
  return std::max(fd, 0.0);
}

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size() || p.empty()) throw std::invalid_argument("dimension mismatch");
  check_distribution(p);
  check_distribution(q);
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) kl += p[i] * std::log(p[i] / std::max(q[i], 1e-12));
  }
  return std::max(kl, 0.0);
}

double inception_score(const Eigen::MatrixXd& rows) {
  if (rows.rows() == 0 || rows.cols() == 0) throw std::invalid_argument("invalid distribution");
  const Eigen::VectorXd marginal = rows.colwise().mean().transpose();
  const std::vector<double> q(marginal.data(), marginal.data() + marginal.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const Eigen::VectorXd r = rows.row(i).transpose();
    total += kl_divergence(std::vector<double>(r.data(), r.data() + r.size()), q);
  }
  return std::exp(total / static_cast<double>(rows.rows()));
}

double scaled_cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double gamma) {
  if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("zero-norm input");
  return gamma * a.dot(b) / (na * nb);
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("curve length mismatch");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  // Relative threshold: a curve that is constant up to rounding has no shape.
  const double scale_a = std::max(1e-300, n * ma * ma);
  const double scale_b = std::max(1e-300, n * mb * mb);
  if (saa <= 1e-24 * scale_a || sbb <= 1e-24 * scale_b || saa == 0.0 || sbb == 0.0)
    throw std::invalid_argument("zero variance");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double envelope_correlation(const AudioBuffer& audio, const loudness::LoudnessCurve& target,
                            const loudness::PipelineConfig& cfg) {
  const auto achieved = loudness::loudness_pipeline(audio, cfg);
  return pearson(achieved.values, target.values);
}

std::vector<Band> class_bands(const dsp::FilterBank& fb, const std::vector<double>& fundamentals_hz) {
  const double bin_hz = fb.sample_rate / fb.n_fft;
  const int k = static_cast<int>(fundamentals_hz.size());
  std::vector<int> owner(fb.n_mels(), -1);
  for (int m = 0; m < fb.n_mels(); ++m) {
    int lo = -1, hi = -1;
    for (int b = 0; b < fb.bins(); ++b) {
      if (fb.weights(m, b) > 0.0) {
        if (lo < 0) lo = b;
        hi = b;
      }
    }
    if (lo < 0) continue;
    int best = -1;
    double best_dist = 0.0;
    for (int c = 0; c < k; ++c) {
      const double f0_bin = fundamentals_hz[c] / bin_hz;
      // Hann main lobe spans +-2 bins around the tone.
      if (hi < f0_bin - 2.0 || lo > f0_bin + 2.0) continue;
      const double dist = std::abs(fb.centers_hz[m] - fundamentals_hz[c]);
      if (best < 0 || dist < best_dist) {
        best = c;
        best_dist = dist;
      }
    }
    owner[m] = best;
  }
  std::vector<Band> bands(k, Band{-1, -1});
  for (int m = 0; m < fb.n_mels(); ++m) {
    const int c = owner[m];
    if (c < 0) continue;
    if (bands[c].first < 0) bands[c].first = m;
    bands[c].last = m;
  }
  for (const auto& b : bands) {
    if (b.first < 0) throw std::invalid_argument("empty band");
  }
  return bands;
}

std::vector<Band> class_bands(const FoleyConfig& cfg) {
  const auto fb = dsp::mel_filterbank(cfg.audio.n_fft, cfg.audio.n_mels, cfg.audio.sample_rate, cfg.audio.fmin,
                                      cfg.audio.fmax);
  return class_bands(fb, cfg.synth.fundamentals_hz);
}

Classification band_energy_classify(const dsp::MelSpectrogram& spec, const std::vector<Band>& bands) {
  if (bands.empty()) throw std::invalid_argument("empty band");
  for (std::size_t i = 0; i < bands.size(); ++i) {
    const auto& b = bands[i];
    if (b.first < 0 || b.last < b.first || b.last >= spec.n_mels()) throw std::invalid_argument("empty band");
    for (std::size_t j = 0; j < i; ++j) {
      if (!(b.last < bands[j].first || b.first > bands[j].last)) throw std::invalid_argument("overlapping bands");
    }
  }
  // Work relative to the global max so a constant offset on log-mel cancels exactly.
  const double top = spec.values.maxCoeff();
  std::vector<double> log_energy(bands.size());
  for (std::size_t i = 0; i < bands.size(); ++i) {
    const auto block = spec.values.middleCols(bands[i].first, bands[i].last - bands[i].first + 1);
    log_energy[i] = std::log((block.array() - top).exp().mean());
  }
  const double lmax = *std::max_element(log_energy.begin(), log_energy.end());
  Classification out;
  out.distribution.resize(bands.size());
  double z = 0.0;
  for (std::size_t i = 0; i < bands.size(); ++i) z += out.distribution[i] = std::exp(log_energy[i] - lmax);
  for (double& p : out.distribution) p /= z;
  out.class_id = static_cast<int>(std::max_element(out.distribution.begin(), out.distribution.end()) -
                                  out.distribution.begin());
  return out;
}

Eigen::VectorXd clip_features(const dsp::MelSpectrogram& spec, const std::vector<Band>& bands,
                              const loudness::LoudnessCurve& curve) {
  const auto cls = band_energy_classify(spec, bands);
  Eigen::VectorXd f(static_cast<Eigen::Index>(bands.size()) + 2);
  for (std::size_t i = 0; i < bands.size(); ++i) f(static_cast<Eigen::Index>(i)) = cls.distribution[i];
  const Eigen::Map<const Eigen::VectorXd> c(curve.values.data(), static_cast<Eigen::Index>(curve.values.size()));
  const double mean = c.mean();
  f(f.size() - 2) = mean;
  f(f.size() - 1) = std::sqrt((c.array() - mean).square().mean());
  return f;
}

}  // namespace foley::metrics
