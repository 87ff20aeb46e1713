#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "moddnn/angle_grid.hpp"

namespace moddnn {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Activation : std::uint32_t { ReLU = 0, Linear = 1 };

// One stride-1 1D convolution with zero same-padding. kernel(o, i*K + k)
// is tap k of the filter from input channel i to output channel o.
struct ConvLayerParams {
  int out_channels = 0;
  int in_channels = 0;
  int kernel_len = 0;
  Activation activation = Activation::ReLU;
  RowMatrix kernel;
  Eigen::VectorXd bias;

  int pad_left() const { return kernel_len / 2; }
  int pad_right() const { return kernel_len - 1 - kernel_len / 2; }
  std::size_t parameter_count() const {
    return static_cast<std::size_t>(kernel.size() + bias.size());
  }
};

struct CalibratorShape {
  std::vector<int> channels{1, 4, 8, 4, 1};
  int kernel_len = 32;
};

struct CalibratorParams {
  std::vector<ConvLayerParams> layers;

  std::size_t parameter_count() const;
  // Throws ConfigError on a broken channel chain or mis-sized tensors.
  void validate() const;

  // Layer order, kernel row-major then bias.
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
  std::uint64_t fingerprint() const;

  // Same shape, all entries zero.
  CalibratorParams zeros_like() const;
  static CalibratorParams zeros(const CalibratorShape& shape);
};

struct ActivationCache {
  std::uint64_t fingerprint = 0;
  Eigen::Index length = 0;
  std::vector<Eigen::MatrixXd> cols;  // im2col of each layer input, (in*K) x L
  std::vector<Eigen::MatrixXd> pre;   // pre-activations, out x L
};

// Spectrum-to-spectrum map; output length equals input length.
Spectrum net_forward(const CalibratorParams& params, const Spectrum& eta, ActivationCache* cache = nullptr);

struct NetGradient {
  CalibratorParams d_params;
  Spectrum d_input;
};

// Exact reverse-mode gradients; ReLU derivative at 0 is 0.
NetGradient net_backward(const CalibratorParams& params, const ActivationCache& cache, const Spectrum& grad_out);

// He-normal kernels with variance 2/(in_channels*kernel_len), zero biases.
// output_scale multiplies the final layer's kernel.
CalibratorParams init_params(std::uint64_t seed, const CalibratorShape& shape = {}, double output_scale = 1.0);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  AdamState(std::size_t n, double beta1_, double beta2_, double eps_)
      : m(n, 0.0), v(n, 0.0), beta1(beta1_), beta2(beta2_), eps(eps_) {}
};

// Bias-corrected Adam update in place.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr);

// Step decay: lr0 * gamma^floor(epoch / step_epochs), epoch 0-based.
struct LrSchedule {
  double lr0 = 1e-3;
  int step_epochs = 20;
  double gamma_lr = 0.5;

  void validate() const;
  double rate(int epoch) const;
};

}  // namespace moddnn
