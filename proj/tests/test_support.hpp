#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <random>

#include <Eigen/Dense>

namespace testing {

inline Eigen::MatrixXcd random_psd(int M, std::mt19937_64& rng, int rank = -1) {
  std::normal_distribution<double> g(0.0, 1.0);
  const int r = rank < 0 ? M : rank;
  Eigen::MatrixXcd B(M, r);
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < r; ++j) B(i, j) = {g(rng), g(rng)};
  Eigen::MatrixXcd R = B * B.adjoint();
  return 0.5 * (R + R.adjoint());
}

inline Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

// Central difference of f at x along coordinate i.
inline double central_diff(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x,
                           Eigen::Index i, double h) {
  const double x0 = x(i);
  x(i) = x0 + h;
  const double fp = f(x);
  x(i) = x0 - h;
  const double fm = f(x);
  return (fp - fm) / (2.0 * h);
}

// |a - b| / max(|a|, |b|, floor)
inline double rel_err(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace testing
