#include "moddnn/coarray.hpp"

#include <cmath>
#include <numbers>

#include "moddnn/error.hpp"

namespace moddnn {

Covariance sample_covariance(const CsiSample& sample) {
  return sample_covariance(std::span<const CsiSample>(&sample, 1));
}

Covariance sample_covariance(std::span<const CsiSample> samples) {
  if (samples.empty()) throw ShapeError("sample_covariance: no samples");
  const Eigen::Index M = samples.front().h.cols();
  Eigen::MatrixXcd R = Eigen::MatrixXcd::Zero(M, M);
  Eigen::Index total = 0;
  for (const CsiSample& s : samples) {
    if (s.h.rows() == 0) throw ShapeError("sample_covariance: K = 0");
    if (s.h.cols() != M) throw ShapeError("sample_covariance: antenna count mismatch");
    // Rows of h are h(k)^T, so h^T conj(h) = sum_k h(k) h(k)^H.
    R.noalias() += s.h.transpose() * s.h.conjugate();
    total += s.h.rows();
  }
  R /= static_cast<double>(total);
  Covariance cov;
  cov.R = 0.5 * (R + R.adjoint());
  return cov;
}

CoarrayVector vectorize(const Covariance& cov) {
  const Eigen::Index M = cov.R.rows();
  if (cov.R.cols() != M) throw ShapeError("vectorize: covariance must be square");
  CoarrayVector out;
  out.M = static_cast<int>(M);
  out.y = Eigen::Map<const Eigen::VectorXcd>(cov.R.data(), M * M);  // column-major storage
  return out;
}

Covariance reshape(const CoarrayVector& y) {
  if (y.y.size() != static_cast<Eigen::Index>(y.M) * y.M) throw ShapeError("reshape: length is not M^2");
  Covariance cov;
  cov.R = Eigen::Map<const Eigen::MatrixXcd>(y.y.data(), y.M, y.M);
  return cov;
}

Eigen::MatrixXcd ideal_coarray_manifold(const AngleGrid& grid, int M) {
  const auto L = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXcd A(static_cast<Eigen::Index>(M) * M, L);
  for (Eigen::Index l = 0; l < L; ++l) {
    const Eigen::VectorXcd a = steering_vector(grid.angle(static_cast<std::size_t>(l)), M);
    const Eigen::MatrixXcd outer = a * a.adjoint();
    A.col(l) = Eigen::Map<const Eigen::VectorXcd>(outer.data(), outer.size());
  }
  return A;
}

CoarrayManifold::CoarrayManifold(const AngleGrid& grid, int M)
    : grid_(grid), M_(M), A_(ideal_coarray_manifold(grid, M)) {}

Spectrum CoarrayManifold::css(const CoarrayVector& y) const {
  if (y.M != M_ || y.y.size() != A_.rows()) throw ShapeError("css: coarray vector length mismatch");
  const Eigen::VectorXcd proj = A_.adjoint() * y.y;
  const double scale = y.y.norm();
  const double imag = proj.imag().cwiseAbs().maxCoeff();
  if (imag > 1e-10 * std::max(scale, 1e-300) && imag > 0.0) {
    throw DomainError("css: coarray vector is not Hermitian (imaginary residual too large)");
  }
  return proj.real();
}

Spectrum css(const CoarrayVector& y, const AngleGrid& grid, int M) {
  return CoarrayManifold(grid, M).css(y);
}

double projection_entry(double theta_i_deg, double theta_j_deg, int M) {
  constexpr double kDegToRad = std::numbers::pi / 180.0;
  const double du = std::sin(theta_i_deg * kDegToRad) - std::sin(theta_j_deg * kDegToRad);
  double acc = static_cast<double>(M);
  for (int d = 1; d < M; ++d) acc += 2.0 * (M - d) * std::cos(std::numbers::pi * d * du);
  // Rounding can push exact Dirichlet zeros slightly negative.
  return std::max(acc, 0.0);
}

ProjectionMatrix::ProjectionMatrix(const AngleGrid& grid, int M) : M_(M) {
  if (M < 2) throw ConfigError("projection_matrix: M must be >= 2");
  const auto L = static_cast<Eigen::Index>(grid.size());
  const std::vector<double> th = grid.angles();
  P_.resize(L, L);
  for (Eigen::Index i = 0; i < L; ++i) {
    P_(i, i) = static_cast<double>(M) * M;
    for (Eigen::Index j = i + 1; j < L; ++j) {
      const double v = projection_entry(th[static_cast<std::size_t>(i)], th[static_cast<std::size_t>(j)], M);
      P_(i, j) = v;
      P_(j, i) = v;
    }
  }
}

ProjectionMatrix ProjectionMatrix::from_matrix(Eigen::MatrixXd P) {
  if (P.rows() != P.cols() || P.rows() == 0) throw ShapeError("projection matrix must be square");
  if ((P - P.transpose()).cwiseAbs().maxCoeff() > 0.0) {
    throw DomainError("projection matrix must be symmetric");
  }
  return ProjectionMatrix(std::move(P), 0);
}

ProjectionMatrix projection_matrix(const AngleGrid& grid, int M) { return ProjectionMatrix(grid, M); }

}  // namespace moddnn
