#include "doctest.h"

#include <cmath>
#include <random>

#include "moddnn/error.hpp"
#include "moddnn/scg.hpp"
#include "test_support.hpp"

using namespace moddnn;

namespace {

ProjectionMatrix small_psd(int L, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd B(L, L);
  for (int i = 0; i < L; ++i) B.col(i) = testing::random_vector(L, rng);
  Eigen::MatrixXd P = B * B.transpose() / L;
  P = 0.5 * (P + P.transpose());
  return ProjectionMatrix::from_matrix(P);
}

}  // namespace

TEST_SUITE("scg") {

TEST_CASE("sparsity value examples") {
  Spectrum z = Spectrum::Zero(5);
  CHECK(sparsity_value(z, 0.01) == 0.0);
  Spectrum e = Spectrum::Zero(5);
  e(0) = 1.0;
  CHECK(sparsity_value(e, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  std::mt19937_64 rng(1);
  const Spectrum v = testing::random_vector(20, rng).cwiseAbs();
  CHECK(sparsity_value(2.0 * v, 0.01) >= sparsity_value(v, 0.01));
  CHECK(sparsity_value(v, 0.01) > 0.0);
  CHECK_THROWS_AS(sparsity_value(v, 0.0), DomainError);
}

TEST_CASE("sparsity subgradient examples") {
  Spectrum z = Spectrum::Zero(3);
  CHECK(sparsity_subgradient(z, 1.0, 1.0) == Spectrum::Zero(3));
  Spectrum e = Spectrum::Zero(3);
  e(0) = 1.0;
  const Spectrum s = sparsity_subgradient(e, 1.0, 1.0);
  CHECK(s(0) == 0.5);
  CHECK(s(1) == 0.0);
  CHECK(s(2) == 0.0);

  std::mt19937_64 rng(2);
  Spectrum v = testing::random_vector(30, rng);
  v(4) = 0.0;
  const Spectrum sv = sparsity_subgradient(v, 0.01, 0.3);
  CHECK((sparsity_subgradient(-v, 0.01, 0.3) + sv).cwiseAbs().maxCoeff() == 0.0);
  CHECK(sv.cwiseAbs().maxCoeff() <= 0.3);
  CHECK(sv(4) == 0.0);
}

TEST_CASE("identity system converges in one step") {
  const auto P = ProjectionMatrix::from_matrix(Eigen::MatrixXd::Identity(6, 6));
  std::mt19937_64 rng(3);
  const Spectrum prev = testing::random_vector(6, rng);
  ScgConfig cfg;
  cfg.lambda = 0.0;
  cfg.mu = 0.0;
  cfg.n_cg_max = 1;
  const auto one = scg_solve(P, prev, Spectrum::Zero(6), cfg);
  CHECK((one.eta - prev).norm() < 1e-14);
  cfg.n_cg_max = 20;
  const auto full = scg_solve(P, prev, Spectrum::Zero(6), cfg);
  CHECK(full.trace.converged);
  CHECK(full.trace.iterations == 2);
  CHECK((full.eta - prev).norm() < 1e-14);
}

TEST_CASE("mu = 0 matches a dense direct solve") {
  AngleGrid grid(-60, 60, 1.0);
  const ProjectionMatrix P(grid, 4);
  std::mt19937_64 rng(4);
  for (double lam : {0.01, 0.1, 1.0}) {
    const Spectrum prev = testing::random_vector(121, rng);
    const Spectrum z = testing::random_vector(121, rng);
    ScgConfig cfg;
    cfg.lambda = lam;
    cfg.mu = 0.0;
    const auto res = scg_solve(P, prev, z, cfg);
    const Eigen::MatrixXd A = P.matrix() + lam * Eigen::MatrixXd::Identity(121, 121);
    const Spectrum direct = A.ldlt().solve(prev + lam * z);
    CHECK((res.eta - direct).norm() / direct.norm() < 1e-8);
    CHECK(res.trace.iterations <= cfg.n_cg_max);
  }
}

// CG minimizes the error in the (P + lambda I)-norm; the Euclidean residual
// can and does grow between steps on this ill-conditioned system.
TEST_CASE("mu = 0 energy-norm error is non-increasing") {
  AngleGrid grid(-60, 60, 1.0);
  const ProjectionMatrix P(grid, 4);
  std::mt19937_64 rng(5);
  for (double lam : {0.01, 0.1, 1.0}) {
    const Eigen::MatrixXd A = P.matrix() + lam * Eigen::MatrixXd::Identity(121, 121);
    for (int rep = 0; rep < 5; ++rep) {
      const Spectrum prev = testing::random_vector(121, rng);
      const Spectrum z = testing::random_vector(121, rng);
      const Spectrum exact = A.ldlt().solve(prev + lam * z);
      ScgConfig cfg;
      cfg.lambda = lam;
      cfg.mu = 0.0;
      ScgTape tape;
      scg_solve(P, prev, z, cfg, StopRule::FixedDepth, &tape);
      double last = INFINITY;
      for (const Spectrum& eta : tape.eta) {
        const Spectrum e = eta - exact;
        const double energy = e.dot(A * e);
        CHECK(energy <= last * (1 + 1e-9) + 1e-18);
        last = energy;
      }
    }
  }
}

TEST_CASE("mu = 0 objective is non-increasing") {
  AngleGrid grid(-60, 60, 1.0);
  const ProjectionMatrix P(grid, 4);
  std::mt19937_64 rng(6);
  ScgConfig cfg;
  cfg.lambda = 0.1;
  cfg.mu = 0.0;
  const auto res = scg_solve(P, testing::random_vector(121, rng), testing::random_vector(121, rng), cfg,
                             StopRule::FixedDepth);
  const auto& f = res.trace.objective_values;
  for (std::size_t n = 1; n < f.size(); ++n) CHECK(f[n] <= f[n - 1] + 1e-9 * std::abs(f[0]));
}

TEST_CASE("lambda dominance returns z") {
  AngleGrid grid(-60, 60, 1.0);
  const ProjectionMatrix P(grid, 4);
  std::mt19937_64 rng(7);
  const Spectrum z = testing::random_vector(121, rng);
  ScgConfig cfg;
  cfg.lambda = 1e6;
  cfg.mu = 0.0;
  const auto res = scg_solve(P, testing::random_vector(121, rng), z, cfg);
  CHECK((res.eta - z).norm() / z.norm() < 1e-3);
}

TEST_CASE("sparsity correction does not reduce near-zero entries") {
  AngleGrid grid(-60, 60, 1.0);
  const ProjectionMatrix P(grid, 4);
  Spectrum target = Spectrum::Zero(121);
  target(80) = 1.0;
  const Spectrum prev = P.apply(target) / 16.0;
  auto small = [](const Spectrum& v) { return (v.array().abs() < 1e-6).count(); };
  ScgConfig cfg;
  cfg.lambda = 0.1;
  cfg.mu = 0.0;
  const auto plain = scg_solve(P, prev, target, cfg);
  cfg.mu = 0.01;
  const auto sparse = scg_solve(P, prev, target, cfg);
  CHECK(small(sparse.eta) >= small(plain.eta));
}

TEST_CASE("stopping contract and determinism") {
  AngleGrid grid(-60, 60, 1.0);
  const ProjectionMatrix P(grid, 4);
  std::mt19937_64 rng(8);
  const Spectrum prev = testing::random_vector(121, rng).cwiseAbs();
  const Spectrum z = testing::random_vector(121, rng).cwiseAbs();
  ScgConfig cfg;
  const auto a = scg_solve(P, prev, z, cfg);
  const auto b = scg_solve(P, prev, z, cfg);
  CHECK(a.eta == b.eta);
  CHECK(a.eta.size() == 121);
  CHECK(a.trace.iterations <= cfg.n_cg_max);
  CHECK(a.trace.update_norms.size() == std::size_t(a.trace.iterations));
  CHECK(a.trace.objective_values.size() == a.trace.update_norms.size());
  if (a.trace.converged) CHECK(a.trace.update_norms.back() < cfg.tol_gamma_cg);

  const auto fixed = scg_solve(P, prev, z, cfg, StopRule::FixedDepth);
  CHECK(fixed.trace.iterations == cfg.n_cg_max);
}

TEST_CASE("negative curvature raises with the trace attached") {
  const auto P = ProjectionMatrix::from_matrix(-Eigen::MatrixXd::Identity(4, 4));
  ScgConfig cfg;
  cfg.lambda = 0.0;
  cfg.mu = 0.0;
  try {
    scg_solve(P, Spectrum::Ones(4), Spectrum::Zero(4), cfg);
    FAIL("expected a curvature breakdown");
  } catch (const CurvatureBreakdown& e) {
    CHECK(e.trace().iterations == 0);
  }
}

TEST_CASE("config validation") {
  ScgConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.epsilon = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = ScgConfig{};
  cfg.n_cg_max = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = ScgConfig{};
  cfg.lambda = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  const auto P = ProjectionMatrix::from_matrix(Eigen::MatrixXd::Identity(4, 4));
  CHECK_THROWS_AS(scg_solve(P, Spectrum::Ones(3), Spectrum::Ones(4), ScgConfig{}), ShapeError);
}

TEST_CASE("backward pass matches finite differences") {
  const int L = 8;
  const auto P = small_psd(L, 9);
  std::mt19937_64 rng(10);
  const Spectrum prev = testing::random_vector(L, rng);
  const Spectrum z = testing::random_vector(L, rng);
  const Spectrum w = testing::random_vector(L, rng);
  ScgConfig cfg;
  cfg.lambda = 0.3;
  cfg.mu = 0.0;
  cfg.n_cg_max = 3;

  auto loss = [&](const Spectrum& p, const Spectrum& zz, double lam) {
    ScgConfig c = cfg;
    c.lambda = lam;
    return w.dot(scg_solve(P, p, zz, c, StopRule::FixedDepth).eta);
  };
  ScgTape tape;
  scg_solve(P, prev, z, cfg, StopRule::FixedDepth, &tape);
  const ScgGradient g = scg_backward(P, tape, w);

  const double h = 1e-6;
  for (int i = 0; i < L; ++i) {
    const double fd_prev = testing::central_diff([&](const Eigen::VectorXd& x) { return loss(x, z, cfg.lambda); },
                                                 prev, i, h);
    const double fd_z = testing::central_diff([&](const Eigen::VectorXd& x) { return loss(prev, x, cfg.lambda); },
                                              z, i, h);
    CHECK(testing::rel_err(g.d_eta_prev(i), fd_prev) < 1e-6);
    CHECK(testing::rel_err(g.d_z(i), fd_z) < 1e-6);
  }
  const double fd_lam = (loss(prev, z, cfg.lambda + h) - loss(prev, z, cfg.lambda - h)) / (2 * h);
  CHECK(testing::rel_err(g.d_lambda, fd_lam) < 1e-6);
}

TEST_CASE("backward pass through exhausted steps") {
  // On P = I the system is solved in one step; later steps are held at zero.
  const auto P = ProjectionMatrix::from_matrix(2.0 * Eigen::MatrixXd::Identity(5, 5));
  std::mt19937_64 rng(11);
  const Spectrum prev = testing::random_vector(5, rng);
  const Spectrum z = testing::random_vector(5, rng);
  const Spectrum w = testing::random_vector(5, rng);
  ScgConfig cfg;
  cfg.lambda = 0.5;
  cfg.mu = 0.0;
  cfg.n_cg_max = 4;
  ScgTape tape;
  const auto res = scg_solve(P, prev, z, cfg, StopRule::FixedDepth, &tape);
  CHECK(res.eta.isApprox((prev + 0.5 * z) / 2.5, 1e-14));
  const ScgGradient g = scg_backward(P, tape, w);
  CHECK(g.d_eta_prev.isApprox(w / 2.5, 1e-12));
  CHECK(g.d_z.isApprox(0.5 * w / 2.5, 1e-12));
  // d/dlam of w'(prev + lam z)/(2 + lam)
  const double expect = w.dot(z) / 2.5 - w.dot(prev + 0.5 * z) / (2.5 * 2.5);
  CHECK(g.d_lambda == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("plain CG examples") {
  const LinearOperator I = [](const Eigen::VectorXd& v) { return v; };
  const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(6, 1, 6);
  const CgResult r = cg_solve(I, b, 10, 1e-12);
  CHECK(r.iterations == 1);
  CHECK((r.x - b).norm() == 0.0);

  const Eigen::VectorXd d = Eigen::VectorXd::LinSpaced(5, 1, 5);
  const LinearOperator D = [&](const Eigen::VectorXd& v) { return Eigen::VectorXd(d.cwiseProduct(v)); };
  const CgResult rd = cg_solve(D, Eigen::VectorXd::Ones(5), 10, 1e-14);
  for (int i = 0; i < 5; ++i) CHECK(rd.x(i) == doctest::Approx(1.0 / (i + 1)).epsilon(1e-12));

  std::mt19937_64 rng(12);
  Eigen::MatrixXd B(50, 50);
  for (int i = 0; i < 50; ++i) B.col(i) = testing::random_vector(50, rng);
  const Eigen::MatrixXd A = B * B.transpose() + 5.0 * Eigen::MatrixXd::Identity(50, 50);
  const Eigen::VectorXd rhs = testing::random_vector(50, rng);
  const LinearOperator Aop = [&](const Eigen::VectorXd& v) { return Eigen::VectorXd(A * v); };
  const CgResult ra = cg_solve(Aop, rhs, 500, 1e-13);
  const Eigen::VectorXd direct = A.ldlt().solve(rhs);
  CHECK((ra.x - direct).norm() / direct.norm() < 1e-10);
  CHECK(ra.relative_residual < 1e-12);

  const LinearOperator neg = [](const Eigen::VectorXd& v) { return Eigen::VectorXd(-v); };
  CHECK_THROWS_AS(cg_solve(neg, b, 5, 1e-10), CurvatureBreakdown);
}

}
