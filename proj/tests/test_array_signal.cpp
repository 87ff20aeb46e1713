#include "doctest.h"

#include <cmath>
#include <numbers>

#include "moddnn/angle_grid.hpp"
#include "moddnn/array_signal.hpp"
#include "moddnn/error.hpp"

using namespace moddnn;
using std::numbers::pi;

TEST_SUITE("array_signal") {

TEST_CASE("grid size and endpoints") {
  AngleGrid desk(-60, 60, 1.0);
  CHECK(desk.size() == 121);
  CHECK(desk.angle(0) == -60.0);
  CHECK(desk.angle(120) == 60.0);
  CHECK(desk.angle(60) == 0.0);

  AngleGrid fine(-60, 60, 0.1);
  CHECK(fine.size() == 1201);
  CHECK(fine.angle(1200) == 60.0);
  for (double a : fine.angles()) {
    CHECK(a >= -60.0);
    CHECK(a <= 60.0);
  }
  CHECK(fine.angle(723) == doctest::Approx(12.3).epsilon(1e-12));
}

TEST_CASE("grid rejects bad bounds") {
  CHECK_THROWS_AS(AngleGrid(10, -10, 1), ConfigError);
  CHECK_THROWS_AS(AngleGrid(-10, 10, 0), ConfigError);
  CHECK_THROWS_AS(AngleGrid(-10, 10, 0.3), ConfigError);
}

TEST_CASE("nearest index ties go to the smaller angle") {
  AngleGrid g(-60, 60, 1.0);
  CHECK(g.nearest_index(0.5) == 60);
  CHECK(g.nearest_index(0.51) == 61);
  CHECK(g.nearest_index(-0.5) == 59);
  CHECK(g.nearest_index(60.0) == 120);
  CHECK_THROWS_AS(g.nearest_index(60.5), DomainError);
}

TEST_CASE("steering vector examples") {
  const auto a0 = steering_vector(0.0, 4);
  for (int m = 0; m < 4; ++m) CHECK(std::abs(a0(m) - cdouble(1, 0)) < 1e-15);

  const auto a30 = steering_vector(30.0, 4);
  const cdouble expect[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  for (int m = 0; m < 4; ++m) CHECK(std::abs(a30(m) - expect[m]) < 1e-12);

  const auto am30 = steering_vector(-30.0, 4);
  CHECK((am30 - a30.conjugate()).norm() < 1e-12);

  CHECK_THROWS_AS(steering_vector(90.0, 4), DomainError);
  CHECK_THROWS_AS(steering_vector(-95.0, 4), DomainError);
}

TEST_CASE("steering unit modulus and conjugate symmetry") {
  for (double th = -89.0; th < 89.0; th += 0.7) {
    const auto a = steering_vector(th, 8);
    CHECK(a(0) == cdouble(1, 0));
    for (int m = 0; m < 8; ++m) CHECK(std::abs(std::abs(a(m)) - 1.0) < 1e-12);
    CHECK((steering_vector(-th, 8) - a.conjugate()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("impairment with rho 0 is ideal") {
  const auto model = ImpairmentModel::draw(4, 3, 0.5, 99);
  for (double th : {-60.0, -12.5, 0.0, 33.3, 60.0}) {
    CHECK(impaired_steering(model, th, 0.0, 4) == steering_vector(th, 4));
  }
}

TEST_CASE("constant pi phase negates one element") {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(4, 4);
  c(1, 0) = pi;
  ImpairmentModel model(c, 4.0, 0);
  const auto a = steering_vector(17.0, 4);
  const auto b = impaired_steering(model, 17.0, 1.0, 4);
  CHECK(std::abs(b(0) - a(0)) < 1e-12);
  CHECK(std::abs(b(1) + a(1)) < 1e-12);
  CHECK(std::abs(b(2) - a(2)) < 1e-12);
  CHECK(std::abs(b(3) - a(3)) < 1e-12);
}

TEST_CASE("impaired steering is phase only") {
  const auto model = ImpairmentModel::draw(4, 3, 0.5, 5);
  for (double th = -60; th <= 60; th += 3.0) {
    const auto b = impaired_steering(model, th, 0.5, 4);
    for (int m = 0; m < 4; ++m) CHECK(std::abs(std::abs(b(m)) - 1.0) < 1e-12);
  }
}

TEST_CASE("impairment coefficients are bounded and seeded") {
  const auto a = ImpairmentModel::draw(4, 3, 0.5, 1234);
  const auto b = ImpairmentModel::draw(4, 3, 0.5, 1234);
  const auto c = ImpairmentModel::draw(4, 3, 0.5, 1235);
  CHECK(a.coeffs() == b.coeffs());
  CHECK(a.coeffs() != c.coeffs());
  CHECK(a.coeffs().cwiseAbs().maxCoeff() <= 0.5);
  CHECK(a.coeffs().rows() == 4);
  CHECK(a.coeffs().cols() == 4);
}

TEST_CASE("Chebyshev phase matches the explicit polynomials") {
  const auto model = ImpairmentModel::draw(4, 3, 0.5, 77);
  for (double th = -60; th <= 60; th += 7.5) {
    const double u = std::sin(th * pi / 180.0);
    const double T[4] = {1.0, u, 2 * u * u - 1, 4 * u * u * u - 3 * u};
    for (int m = 0; m < 4; ++m) {
      double expect = 0.0;
      for (int q = 0; q < 4; ++q) expect += model.coeffs()(m, q) * T[q];
      CHECK(model.phase(m, th) == doctest::Approx(expect).epsilon(1e-13));
    }
  }
}

TEST_CASE("phase error is Lipschitz on a fine sub-grid") {
  const auto model = ImpairmentModel::draw(4, 3, 0.5, 2024);
  const double delta = 0.01;
  for (int m = 0; m < 4; ++m) {
    const double bound = model.lipschitz_bound(m);
    double worst = 0.0;
    for (double th = -60.0; th < 60.0; th += delta) {
      worst = std::max(worst, std::abs(model.phase(m, th + delta) - model.phase(m, th)));
    }
    CHECK(worst <= bound * delta * (1 + 1e-9));
    CHECK(worst < 1e-3);
  }
}

TEST_CASE("noiseless ideal CSI is rank one") {
  AngleGrid grid(-60, 60, 1.0);
  SrsConfig srs;
  srs.K = 32;
  const auto model = ImpairmentModel::ideal(4);
  const auto s = synthesize_csi(grid, ArrayConfig{}, srs, model, 23.0, std::nullopt, 0.0, 5);
  CHECK(std::isinf(s.snr_db));
  const auto a = steering_vector(23.0, 4);
  for (int k = 0; k < srs.K; ++k) {
    const cdouble sym = s.h(k, 0);
    CHECK(std::abs(std::abs(sym) - 1.0) < 1e-12);
    CHECK((s.h.row(k).transpose() - sym * a).norm() < 1e-12);
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(s.h);
  CHECK(svd.singularValues()(1) < 1e-10 * svd.singularValues()(0));
}

TEST_CASE("empirical per-antenna SNR matches the setting") {
  AngleGrid grid(-60, 60, 1.0);
  SrsConfig srs;
  srs.K = 1024;
  srs.delta_f_hz = 60e3;
  const auto model = ImpairmentModel::draw(4, 3, 0.5, 3);
  const int M = 4;
  double noise = 0.0;
  int count = 0;
  for (int rep = 0; rep < 3; ++rep) {
    const auto s = synthesize_csi(grid, ArrayConfig{}, srs, model, -41.0, 10.0, 1.0, 100 + rep);
    const auto a = impaired_steering(model, -41.0, 1.0, M);
    const Eigen::MatrixXcd proj = Eigen::MatrixXcd::Identity(M, M) - a * a.adjoint() / double(M);
    for (int k = 0; k < srs.K; ++k) {
      noise += (proj * s.h.row(k).transpose()).squaredNorm() / (M - 1);
      ++count;
    }
  }
  const double snr = 10.0 * std::log10(1.0 / (noise / count));
  CHECK(std::abs(snr - 10.0) < 0.5);
}

TEST_CASE("synthesis is deterministic per seed") {
  AngleGrid grid(-60, 60, 1.0);
  const auto model = ImpairmentModel::draw(4, 3, 0.5, 3);
  const auto a = synthesize_csi(grid, ArrayConfig{}, SrsConfig{}, model, 5.0, 3.0, 0.7, 42);
  const auto b = synthesize_csi(grid, ArrayConfig{}, SrsConfig{}, model, 5.0, 3.0, 0.7, 42);
  const auto c = synthesize_csi(grid, ArrayConfig{}, SrsConfig{}, model, 5.0, 3.0, 0.7, 43);
  CHECK(a.h == b.h);
  CHECK(a.h != c.h);
  CHECK(a.h.rows() == 128);
  CHECK(a.h.cols() == 4);
}

TEST_CASE("synthesis rejects bad inputs") {
  AngleGrid grid(-60, 60, 1.0);
  const auto model = ImpairmentModel::ideal(4);
  CHECK_THROWS_AS(synthesize_csi(grid, ArrayConfig{}, SrsConfig{}, model, 5.0, INFINITY, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(synthesize_csi(grid, ArrayConfig{}, SrsConfig{}, model, 5.0, NAN, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(synthesize_csi(grid, ArrayConfig{}, SrsConfig{}, model, 70.0, 10.0, 0.0, 1), DomainError);
}

TEST_CASE("narrowband steering is shared by all subcarriers") {
  AngleGrid grid(-60, 60, 1.0);
  SrsConfig srs;
  srs.K = 16;
  const auto model = ImpairmentModel::draw(4, 3, 0.5, 8);
  const auto s = synthesize_csi(grid, ArrayConfig{}, srs, model, -7.0, std::nullopt, 1.0, 9);
  const auto a = impaired_steering(model, -7.0, 1.0, 4);
  for (int k = 0; k < srs.K; ++k) CHECK((s.h.row(k).transpose() - (s.h(k, 0) / a(0)) * a).norm() < 1e-12);
}

TEST_CASE("default numerology validates") {
  SrsConfig srs;
  CHECK(srs.fc_hz == 4.8498e9);
  CHECK(srs.delta_f_hz == 60e3);
  CHECK(srs.bandwidth_hz == 100e6);
  CHECK_NOTHROW(srs.validate());
  CHECK(srs.full_scale_K() == 1666);
  ArrayConfig arr;
  CHECK(arr.M == 4);
  CHECK_NOTHROW(arr.validate());

  SrsConfig too_wide = srs;
  too_wide.K = 2000;
  CHECK_THROWS_AS(too_wide.validate(), ConfigError);
  ArrayConfig one{1, 0.5};
  CHECK_THROWS_AS(one.validate(), ConfigError);
}

TEST_CASE("label spectrum") {
  AngleGrid g(-60, 60, 1.0);
  const Spectrum one_hot = label_spectrum(g, 0.0, 0.0);
  CHECK(one_hot(60) == 1.0);
  CHECK(one_hot.sum() == 1.0);

  const Spectrum bump = label_spectrum(g, 0.0, 1.0);
  CHECK(bump.maxCoeff() == doctest::Approx(1.0));
  CHECK(bump(59) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(bump(61) == doctest::Approx(0.6065306597).epsilon(1e-9));

  const Spectrum l = label_spectrum(g, 17.0, 1.0);
  const Spectrum r = label_spectrum(g, -17.0, 1.0);
  CHECK((l.reverse() - r).cwiseAbs().maxCoeff() < 1e-15);

  CHECK_THROWS_AS(label_spectrum(g, 61.0, 1.0), DomainError);
  CHECK_THROWS_AS(label_spectrum(g, 0.0, -1.0), DomainError);
}

}
