#include "moddnn/array_signal.hpp"

#include <cmath>
#include <numbers>
#include <limits>
#include <random>
#include <string>

#include "moddnn/error.hpp"

namespace moddnn {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

void check_angle(double theta_deg) {
  if (!std::isfinite(theta_deg) || std::abs(theta_deg) >= 90.0) {
    throw DomainError("steering angle must satisfy |theta| < 90 deg, got " + std::to_string(theta_deg));
  }
}

// T_0..T_Q at x by the three-term recurrence.
double chebyshev_series(const Eigen::MatrixXd& coeffs, int m, double x) {
  const int n = static_cast<int>(coeffs.cols());
  double t_prev = 1.0;
  double t_cur = x;
  double acc = coeffs(m, 0);
  if (n > 1) acc += coeffs(m, 1) * x;
  for (int q = 2; q < n; ++q) {
    const double t_next = 2.0 * x * t_cur - t_prev;
    acc += coeffs(m, q) * t_next;
    t_prev = t_cur;
    t_cur = t_next;
  }
  return acc;
}

}  // namespace

void ArrayConfig::validate() const {
  if (M < 2) throw ConfigError("array: M must be >= 2");
  if (spacing_wavelengths != 0.5) throw ConfigError("array: only half-wavelength spacing is supported");
}

void SrsConfig::validate() const {
  if (K < 1) throw ConfigError("srs: K must be >= 1");
  if (!(fc_hz > 0.0) || !(delta_f_hz > 0.0) || !(bandwidth_hz > 0.0)) {
    throw ConfigError("srs: frequencies must be positive");
  }
  if (delta_f_hz * K > bandwidth_hz * (1.0 + 1e-12)) {
    throw ConfigError("srs: K * delta_f exceeds the bandwidth");
  }
  if (bandwidth_hz >= 0.1 * fc_hz) {
    throw ConfigError("srs: bandwidth must be much smaller than the carrier (narrowband model)");
  }
}

int SrsConfig::full_scale_K() const {
  return static_cast<int>(std::floor(bandwidth_hz / delta_f_hz + 1e-9));
}

ImpairmentModel::ImpairmentModel(Eigen::MatrixXd coeffs, double phi_max, std::uint64_t seed)
    : coeffs_(std::move(coeffs)), phi_max_(phi_max), seed_(seed) {
  if (coeffs_.rows() < 2 || coeffs_.cols() < 1) throw ConfigError("impairment: bad coefficient shape");
  if (!(phi_max_ >= 0.0)) throw ConfigError("impairment: phi_max must be >= 0");
  if (!coeffs_.allFinite()) throw ConfigError("impairment: non-finite coefficient");
  if (coeffs_.cwiseAbs().maxCoeff() > phi_max_) {
    throw ConfigError("impairment: coefficient exceeds phi_max");
  }
}

ImpairmentModel ImpairmentModel::draw(int M, int order_Q, double phi_max, std::uint64_t seed) {
  if (M < 2) throw ConfigError("impairment: M must be >= 2");
  if (order_Q < 0) throw ConfigError("impairment: order_Q must be >= 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-phi_max, phi_max);
  Eigen::MatrixXd c(M, order_Q + 1);
  // Row-major draw order so the realization is stable if Q changes last.
  for (int m = 0; m < M; ++m)
    for (int q = 0; q <= order_Q; ++q) c(m, q) = unif(rng);
  return ImpairmentModel(std::move(c), phi_max, seed);
}

ImpairmentModel ImpairmentModel::ideal(int M, int order_Q) {
  return ImpairmentModel(Eigen::MatrixXd::Zero(M, order_Q + 1), 0.0, 0);
}

double ImpairmentModel::phase(int m, double theta_deg) const {
  return chebyshev_series(coeffs_, m, std::sin(theta_deg * kDegToRad));
}

double ImpairmentModel::lipschitz_bound(int m) const {
  // |T_q'(x)| <= q^2 on [-1, 1], |d sin(theta)/d theta| <= pi/180 per degree.
  double acc = 0.0;
  for (int q = 1; q < coeffs_.cols(); ++q) acc += std::abs(coeffs_(m, q)) * q * q;
  return acc * kDegToRad;
}

Eigen::VectorXcd steering_vector(double theta_deg, int M) {
  check_angle(theta_deg);
  if (M < 2) throw ConfigError("steering_vector: M must be >= 2");
  const double u = std::sin(theta_deg * kDegToRad);
  Eigen::VectorXcd a(M);
  for (int m = 0; m < M; ++m) a(m) = std::polar(1.0, std::numbers::pi * m * u);
  return a;
}

Eigen::VectorXcd impaired_steering(const ImpairmentModel& model, double theta_deg, double rho, int M) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("impaired_steering: rho must lie in [0, 1]");
  if (model.M() != M) throw ShapeError("impaired_steering: model antenna count mismatch");
  Eigen::VectorXcd a = steering_vector(theta_deg, M);
  if (rho == 0.0) return a;
  for (int m = 0; m < M; ++m) a(m) *= std::polar(1.0, rho * model.phase(m, theta_deg));
  return a;
}

CsiSample synthesize_csi(const AngleGrid& grid, const ArrayConfig& array, const SrsConfig& srs,
                         const ImpairmentModel& model, double theta_true_deg,
                         std::optional<double> snr_db, double rho, std::uint64_t rng_seed) {
  array.validate();
  srs.validate();
  if (!grid.contains(theta_true_deg)) throw DomainError("synthesize_csi: theta outside grid bounds");
  if (snr_db && !std::isfinite(*snr_db)) throw ConfigError("synthesize_csi: non-finite SNR");

  const int M = array.M;
  const int K = srs.K;
  const Eigen::VectorXcd a = impaired_steering(model, theta_true_deg, rho, M);

  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double noise_std =
      snr_db ? std::sqrt(std::pow(10.0, -*snr_db / 10.0) / 2.0) : 0.0;
  const double qpsk = 1.0 / std::numbers::sqrt2;

  CsiSample out;
  out.h.resize(K, M);
  out.theta_true_deg = theta_true_deg;
  out.snr_db = snr_db ? *snr_db : std::numeric_limits<double>::infinity();
  out.rho = rho;
  for (int k = 0; k < K; ++k) {
    const std::uint64_t bits = rng();
    const cdouble s((bits & 1U) ? qpsk : -qpsk, (bits & 2U) ? qpsk : -qpsk);
    for (int m = 0; m < M; ++m) {
      cdouble v = a(m) * s;
      if (snr_db) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        v += cdouble(noise_std * re, noise_std * im);
      }
      out.h(k, m) = v;
    }
  }
  return out;
}

Spectrum label_spectrum(const AngleGrid& grid, double theta_true_deg, double width_deg) {
  if (!(width_deg >= 0.0)) throw DomainError("label_spectrum: width must be >= 0");
  if (!grid.contains(theta_true_deg)) throw DomainError("label_spectrum: theta outside grid bounds");
  Spectrum out = Spectrum::Zero(static_cast<Eigen::Index>(grid.size()));
  if (width_deg == 0.0) {
    out(static_cast<Eigen::Index>(grid.nearest_index(theta_true_deg))) = 1.0;
    return out;
  }
  const double inv = 1.0 / (2.0 * width_deg * width_deg);
  for (std::size_t l = 0; l < grid.size(); ++l) {
    const double d = grid.angle(l) - theta_true_deg;
    out(static_cast<Eigen::Index>(l)) = std::exp(-d * d * inv);
  }
  // Off-grid truths: rescale so the sampled bump keeps a unit peak.
  out /= out.maxCoeff();
  return out;
}

}  // namespace moddnn
