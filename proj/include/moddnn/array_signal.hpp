#pragma once

#include <complex>
#include <cstdint>
#include <optional>

#include <Eigen/Dense>

#include "moddnn/angle_grid.hpp"

namespace moddnn {

using cdouble = std::complex<double>;

struct ArrayConfig {
  int M = 4;
  double spacing_wavelengths = 0.5;

  void validate() const;
};

// SRS numerology. Only K influences the synthesized samples; the carrier
// values are validated for the narrowband assumption.
struct SrsConfig {
  double fc_hz = 4.8498e9;
  double delta_f_hz = 60e3;
  double bandwidth_hz = 100e6;
  int K = 128;
  double tx_power_dbm = 23.0;

  void validate() const;
  // floor(B / delta_f): 1666 for the default numerology.
  int full_scale_K() const;
};

// Angular-dependent phase error of a hardware instance:
//   phi_m(theta) = sum_q c(m, q) * T_q(sin theta)
// with T_q the Chebyshev polynomials of the first kind.
class ImpairmentModel {
 public:
  static constexpr int kDefaultOrder = 3;
  static constexpr double kDefaultPhiMax = 0.5;

  // Coefficients i.i.d. uniform on [-phi_max, phi_max].
  static ImpairmentModel draw(int M, int order_Q, double phi_max, std::uint64_t seed);
  // All-zero coefficients (ideal hardware).
  static ImpairmentModel ideal(int M, int order_Q = kDefaultOrder);

  ImpairmentModel(Eigen::MatrixXd coeffs, double phi_max, std::uint64_t seed);

  int M() const { return static_cast<int>(coeffs_.rows()); }
  int order() const { return static_cast<int>(coeffs_.cols()) - 1; }
  double phi_max() const { return phi_max_; }
  std::uint64_t seed() const { return seed_; }
  const Eigen::MatrixXd& coeffs() const { return coeffs_; }

  // Phase error of antenna m (0-based) in radians, before rho weighting.
  double phase(int m, double theta_deg) const;
  // Upper bound on |d phi_m / d theta| in rad/deg.
  double lipschitz_bound(int m) const;

 private:
  Eigen::MatrixXd coeffs_;  // M x (Q+1)
  double phi_max_;
  std::uint64_t seed_;
};

// Frequency-domain snapshot of one SRS symbol; row k of h is h(k).
struct CsiSample {
  Eigen::MatrixXcd h;  // K x M
  double theta_true_deg = 0.0;
  double snr_db = 0.0;  // +inf for noiseless samples
  double rho = 0.0;
};

// a_m(theta) = exp(j*pi*(m-1)*sin(theta)).
Eigen::VectorXcd steering_vector(double theta_deg, int M);

Eigen::VectorXcd impaired_steering(const ImpairmentModel& model, double theta_deg, double rho, int M);

// h(k) = a~(theta) * s(k) + n(k), s(k) unit-power QPSK, n(k) circular
// Gaussian with per-antenna variance 10^(-snr/10). snr_db = nullopt drops
// the noise term entirely.
CsiSample synthesize_csi(const AngleGrid& grid, const ArrayConfig& array, const SrsConfig& srs,
                         const ImpairmentModel& model, double theta_true_deg,
                         std::optional<double> snr_db, double rho, std::uint64_t rng_seed);

// Ground-truth spectrum: one-hot at the nearest grid index for width 0,
// otherwise a unit-peak Gaussian bump of the given width.
Spectrum label_spectrum(const AngleGrid& grid, double theta_true_deg, double width_deg);

}  // namespace moddnn
