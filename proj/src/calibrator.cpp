#include "moddnn/calibrator.hpp"

#include <cmath>
#include <cstring>
#include <random>
#include <string>

#include "moddnn/error.hpp"

namespace moddnn {

namespace {

Eigen::MatrixXd im2col(const Eigen::MatrixXd& x, int kernel_len, int pad_left) {
  const Eigen::Index C = x.rows();
  const Eigen::Index L = x.cols();
  Eigen::MatrixXd cols = Eigen::MatrixXd::Zero(C * kernel_len, L);
  for (Eigen::Index i = 0; i < C; ++i) {
    for (int k = 0; k < kernel_len; ++k) {
      const Eigen::Index row = i * kernel_len + k;
      const Eigen::Index shift = k - pad_left;  // cols(row, t) = x(i, t + shift)
      const Eigen::Index t0 = std::max<Eigen::Index>(0, -shift);
      const Eigen::Index t1 = std::min<Eigen::Index>(L, L - shift);
      for (Eigen::Index t = t0; t < t1; ++t) cols(row, t) = x(i, t + shift);
    }
  }
  return cols;
}

Eigen::MatrixXd col2im(const Eigen::MatrixXd& dcols, Eigen::Index C, int kernel_len, int pad_left) {
  const Eigen::Index L = dcols.cols();
  Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(C, L);
  for (Eigen::Index i = 0; i < C; ++i) {
    for (int k = 0; k < kernel_len; ++k) {
      const Eigen::Index row = i * kernel_len + k;
      const Eigen::Index shift = k - pad_left;
      const Eigen::Index t0 = std::max<Eigen::Index>(0, -shift);
      const Eigen::Index t1 = std::min<Eigen::Index>(L, L - shift);
      for (Eigen::Index t = t0; t < t1; ++t) dx(i, t + shift) += dcols(row, t);
    }
  }
  return dx;
}

}  // namespace

std::size_t CalibratorParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.parameter_count();
  return n;
}

void CalibratorParams::validate() const {
  if (layers.empty()) throw ConfigError("calibrator: no layers");
  if (layers.front().in_channels != 1) throw ConfigError("calibrator: first layer must take 1 channel");
  if (layers.back().out_channels != 1) throw ConfigError("calibrator: last layer must emit 1 channel");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& layer = layers[i];
    if (layer.kernel_len < 1 || layer.in_channels < 1 || layer.out_channels < 1) {
      throw ConfigError("calibrator: layer " + std::to_string(i) + " has non-positive dimensions");
    }
    if (layer.kernel.rows() != layer.out_channels ||
        layer.kernel.cols() != static_cast<Eigen::Index>(layer.in_channels) * layer.kernel_len ||
        layer.bias.size() != layer.out_channels) {
      throw ConfigError("calibrator: layer " + std::to_string(i) + " tensor shape mismatch");
    }
    if (i + 1 < layers.size() && layer.out_channels != layers[i + 1].in_channels) {
      throw ConfigError("calibrator: channel chain broken between layers " + std::to_string(i) + " and " +
                        std::to_string(i + 1));
    }
  }
}

std::vector<double> CalibratorParams::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& layer : layers) {
    out.insert(out.end(), layer.kernel.data(), layer.kernel.data() + layer.kernel.size());
    out.insert(out.end(), layer.bias.data(), layer.bias.data() + layer.bias.size());
  }
  return out;
}

void CalibratorParams::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw ContractError("calibrator: flat parameter size mismatch");
  std::size_t pos = 0;
  for (auto& layer : layers) {
    std::memcpy(layer.kernel.data(), flat.data() + pos, sizeof(double) * layer.kernel.size());
    pos += static_cast<std::size_t>(layer.kernel.size());
    std::memcpy(layer.bias.data(), flat.data() + pos, sizeof(double) * layer.bias.size());
    pos += static_cast<std::size_t>(layer.bias.size());
  }
}

std::uint64_t CalibratorParams::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const double* p, Eigen::Index n) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < static_cast<std::size_t>(n) * sizeof(double); ++i) {
      h = (h ^ bytes[i]) * 0x100000001b3ULL;
    }
  };
  for (const auto& layer : layers) {
    h = (h ^ static_cast<std::uint64_t>(layer.out_channels * 131 + layer.in_channels)) * 0x100000001b3ULL;
    mix(layer.kernel.data(), layer.kernel.size());
    mix(layer.bias.data(), layer.bias.size());
  }
  return h;
}

CalibratorParams CalibratorParams::zeros_like() const {
  CalibratorParams out = *this;
  for (auto& layer : out.layers) {
    layer.kernel.setZero();
    layer.bias.setZero();
  }
  return out;
}

CalibratorParams CalibratorParams::zeros(const CalibratorShape& shape) {
  if (shape.channels.size() < 2) throw ConfigError("calibrator: need at least one layer");
  if (shape.kernel_len < 1) throw ConfigError("calibrator: kernel_len must be >= 1");
  CalibratorParams out;
  const std::size_t n_layers = shape.channels.size() - 1;
  for (std::size_t i = 0; i < n_layers; ++i) {
    ConvLayerParams layer;
    layer.in_channels = shape.channels[i];
    layer.out_channels = shape.channels[i + 1];
    layer.kernel_len = shape.kernel_len;
    layer.activation = (i + 1 == n_layers) ? Activation::Linear : Activation::ReLU;
    layer.kernel = RowMatrix::Zero(layer.out_channels, static_cast<Eigen::Index>(layer.in_channels) * shape.kernel_len);
    layer.bias = Eigen::VectorXd::Zero(layer.out_channels);
    out.layers.push_back(std::move(layer));
  }
  out.validate();
  return out;
}

Spectrum net_forward(const CalibratorParams& params, const Spectrum& eta, ActivationCache* cache) {
  params.validate();
  const Eigen::Index L = eta.size();
  if (L < 1) throw ShapeError("net_forward: empty input");
  if (cache) {
    cache->fingerprint = params.fingerprint();
    cache->length = L;
    cache->cols.clear();
    cache->pre.clear();
  }
  Eigen::MatrixXd x = eta.transpose();  // 1 x L
  for (const auto& layer : params.layers) {
    Eigen::MatrixXd cols = im2col(x, layer.kernel_len, layer.pad_left());
    Eigen::MatrixXd pre = layer.kernel * cols;
    pre.colwise() += layer.bias;
    if (layer.activation == Activation::ReLU) {
      x = pre.cwiseMax(0.0);
    } else {
      x = pre;
    }
    if (cache) {
      cache->cols.push_back(std::move(cols));
      cache->pre.push_back(std::move(pre));
    }
  }
  return x.row(0).transpose();
}

NetGradient net_backward(const CalibratorParams& params, const ActivationCache& cache, const Spectrum& grad_out) {
  if (cache.cols.size() != params.layers.size() || cache.fingerprint != params.fingerprint()) {
    throw ContractError("net_backward: activation cache does not belong to these parameters");
  }
  if (grad_out.size() != cache.length) throw ShapeError("net_backward: gradient length mismatch");

  NetGradient out;
  out.d_params = params.zeros_like();
  Eigen::MatrixXd grad = grad_out.transpose();  // d loss / d layer output
  for (std::size_t idx = params.layers.size(); idx-- > 0;) {
    const auto& layer = params.layers[idx];
    const Eigen::MatrixXd& pre = cache.pre[idx];
    if (layer.activation == Activation::ReLU) {
      grad = (pre.array() > 0.0).select(grad, 0.0);
    }
    auto& d_layer = out.d_params.layers[idx];
    d_layer.kernel.noalias() = grad * cache.cols[idx].transpose();
    d_layer.bias = grad.rowwise().sum();
    const Eigen::MatrixXd dcols = layer.kernel.transpose() * grad;
    grad = col2im(dcols, layer.in_channels, layer.kernel_len, layer.pad_left());
  }
  out.d_input = grad.row(0).transpose();
  return out;
}

CalibratorParams init_params(std::uint64_t seed, const CalibratorShape& shape, double output_scale) {
  CalibratorParams params = CalibratorParams::zeros(shape);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    auto& layer = params.layers[i];
    double stddev = std::sqrt(2.0 / (static_cast<double>(layer.in_channels) * layer.kernel_len));
    if (i + 1 == params.layers.size()) stddev *= output_scale;
    for (Eigen::Index r = 0; r < layer.kernel.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.kernel.cols(); ++c) layer.kernel(r, c) = stddev * gauss(rng);
  }
  return params;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr) {
  if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ContractError("adam_step: parameter / gradient / state size mismatch");
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

void LrSchedule::validate() const {
  if (!(lr0 > 0.0)) throw ConfigError("lr schedule: lr0 must be > 0");
  if (step_epochs < 1) throw ConfigError("lr schedule: step_epochs must be >= 1");
  if (!(gamma_lr > 0.0 && gamma_lr <= 1.0)) throw ConfigError("lr schedule: gamma_lr must lie in (0, 1]");
}

double LrSchedule::rate(int epoch) const {
  return lr0 * std::pow(gamma_lr, static_cast<double>(epoch / step_epochs));
}

}  // namespace moddnn
