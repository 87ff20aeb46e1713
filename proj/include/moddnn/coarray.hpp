#pragma once

#include <span>

#include <Eigen/Dense>

#include "moddnn/angle_grid.hpp"
#include "moddnn/array_signal.hpp"

namespace moddnn {

struct Covariance {
  Eigen::MatrixXcd R;  // M x M, Hermitian by construction
};

// Column-stacked covariance: y[m*M + i] = R(i, m).
struct CoarrayVector {
  Eigen::VectorXcd y;
  int M = 0;
};

// R = (1/K) sum_k h(k) h(k)^H, symmetrized as (R + R^H) / 2.
Covariance sample_covariance(const CsiSample& sample);
// Average over several symbols (multi-symbol window).
Covariance sample_covariance(std::span<const CsiSample> samples);

CoarrayVector vectorize(const Covariance& cov);
Covariance reshape(const CoarrayVector& y);

// M^2 x L matrix; column l is vec(a(theta_l) a(theta_l)^H).
Eigen::MatrixXcd ideal_coarray_manifold(const AngleGrid& grid, int M);

// Ideal coarray manifold bound to a grid, for repeated CSS evaluation.
class CoarrayManifold {
 public:
  CoarrayManifold(const AngleGrid& grid, int M);

  const AngleGrid& grid() const { return grid_; }
  int M() const { return M_; }
  const Eigen::MatrixXcd& matrix() const { return A_; }

  // eta_hat = Re(A^H y). Throws ShapeError on length mismatch and
  // DomainError if the imaginary residual exceeds 1e-10 * ||y||.
  Spectrum css(const CoarrayVector& y) const;

 private:
  AngleGrid grid_;
  int M_;
  Eigen::MatrixXcd A_;
};

Spectrum css(const CoarrayVector& y, const AngleGrid& grid, int M);

// |a^H(theta_i) a(theta_j)|^2 evaluated through the coarray lag sum
// M + 2 sum_d (M - d) cos(pi d (u_i - u_j)), which is exactly M^2 on the
// diagonal.
double projection_entry(double theta_i_deg, double theta_j_deg, int M);

// Dense ideal projection matrix P = A^H A. Immutable once built.
class ProjectionMatrix {
 public:
  ProjectionMatrix(const AngleGrid& grid, int M);

  // Arbitrary symmetric operator (test fixtures such as P = I).
  static ProjectionMatrix from_matrix(Eigen::MatrixXd P);

  const Eigen::MatrixXd& matrix() const { return P_; }
  Eigen::Index size() const { return P_.rows(); }
  int M() const { return M_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const { return P_ * v; }

 private:
  ProjectionMatrix(Eigen::MatrixXd P, int M) : P_(std::move(P)), M_(M) {}

  Eigen::MatrixXd P_;
  int M_ = 0;
};

ProjectionMatrix projection_matrix(const AngleGrid& grid, int M);

}  // namespace moddnn
