#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "foley/conditioning.hpp"
#include "foley/config.hpp"
#include "foley/latent.hpp"

namespace foley::nn {

using RowMatrix = cond::RowMatrix;

struct TensorSpec {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;

  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

/// Named tensors packed into one flat buffer. Gradients share the layout.
class TensorLayout {
 public:
  void add(const std::string& name, int rows, int cols);
  const TensorSpec& spec(const std::string& name) const;
  const std::vector<TensorSpec>& specs() const { return specs_; }
  std::size_t total() const { return total_; }

 private:
  std::vector<TensorSpec> specs_;
  std::size_t total_ = 0;
};

/// Shape information the denoiser needs, derived from a FoleyConfig.
struct Topology {
  int latent_height = 16;
  int latent_width = 64;
  int curve_length = 20;
  int classes = 4;
  int context_channels = 32;
  int visual_frames = 8;
  ModelConfig model;
  // Schedule behind the input skip g * sqrt(1 - abar_t) * z_t.
  DiffusionConfig diffusion;

  static Topology from_config(const FoleyConfig& cfg);
  bool operator==(const Topology&) const = default;
};

TensorLayout make_layout(const Topology& topo);

/// Every trainable parameter: U-Net convolutions, timestep affines, attention
/// projections, fusion weight, signal MLP, text table and null tokens.
struct DenoiserParams {
  Topology topo;
  TensorLayout layout;
  std::vector<double> values;

  Eigen::Map<const RowMatrix> mat(const std::string& name) const;
  Eigen::Map<RowMatrix> mat(const std::string& name);
  Eigen::Map<const Eigen::VectorXd> vec(const std::string& name) const;
  std::size_t count() const { return values.size(); }
};

DenoiserParams init_params(const Topology& topo, std::uint64_t seed);
DenoiserParams zero_params(const Topology& topo);

/// Buffer with the parameter layout, used for gradients.
struct ParamGrads {
  const TensorLayout* layout = nullptr;
  std::vector<double> values;

  explicit ParamGrads(const DenoiserParams& p) : layout(&p.layout), values(p.count(), 0.0) {}
  Eigen::Map<RowMatrix> mat(const std::string& name);
  Eigen::Map<Eigen::VectorXd> vec(const std::string& name);
};

struct ForwardCache;

/// Cached activations of one denoise() evaluation, consumed by backward().
class DenoiseTrace {
 public:
  DenoiseTrace();
  ~DenoiseTrace();
  DenoiseTrace(DenoiseTrace&&) noexcept;
  DenoiseTrace& operator=(DenoiseTrace&&) noexcept;

  ForwardCache& cache() { return *cache_; }
  const ForwardCache& cache() const { return *cache_; }

 private:
  std::unique_ptr<ForwardCache> cache_;
};

/// eps prediction over time with mel bins as channels: inject signal, two down
/// blocks, mid block with cross-attention over [text | fused visual], two up
/// blocks with skips, width-3 output head, plus a learned gain on sqrt(1 - abar_t) * z_t.
Latent denoise(const Latent& zt, int t, const cond::ConditionSet& cond, const DenoiserParams& params,
               DenoiseTrace* trace = nullptr);

/// Accumulates d(loss)/d(params) into grads given d(loss)/d(output).
void denoise_backward(const DenoiseTrace& trace, const Latent& d_out, const cond::ConditionSet& cond,
                      const DenoiserParams& params, ParamGrads& grads);

}  // namespace foley::nn
