#include "moddnn/music.hpp"

#include <algorithm>

#include "moddnn/error.hpp"

namespace moddnn {

MusicSpectrum music_spectrum(const Covariance& R, const AngleGrid& grid, const MusicConfig& cfg) {
  const Eigen::Index M = R.R.rows();
  if (R.R.cols() != M) throw ShapeError("music: covariance is not square");
  if (cfg.n_sources < 1 || cfg.n_sources >= M) throw ConfigError("music: need 1 <= n_sources < M");
  if (!R.R.allFinite()) throw NumericalError("music: covariance has non-finite entries");

  // Eigenvalues come back ascending; the first M - n_sources span the noise subspace.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(R.R);
  if (eig.info() != Eigen::Success) throw NumericalError("music: eigendecomposition failed");
  const Eigen::Index n_noise = M - cfg.n_sources;
  const Eigen::MatrixXcd En = eig.eigenvectors().leftCols(n_noise);

  MusicSpectrum out;
  const double trace = std::max(R.R.trace().real(), 0.0);
  const double gap = eig.eigenvalues()(n_noise) - eig.eigenvalues()(n_noise - 1);
  out.degenerate = !(gap >= 1e-12 * trace) || trace == 0.0;

  const std::size_t L = grid.size();
  out.values.resize(static_cast<Eigen::Index>(L));
  for (std::size_t l = 0; l < L; ++l) {
    const Eigen::VectorXcd a = steering_vector(grid.angle(l), static_cast<int>(M));
    const double d = (En.adjoint() * a).squaredNorm();
    out.values(static_cast<Eigen::Index>(l)) = 1.0 / std::max(d, 1e-300);
  }
  return out;
}

MusicEstimate music_estimate(const Covariance& R, const AngleGrid& grid, const MusicConfig& cfg,
                             bool interpolate) {
  const MusicSpectrum s = music_spectrum(R, grid, cfg);
  return MusicEstimate{estimate_aoa(s.values, grid, interpolate), s.degenerate};
}

}  // namespace moddnn
