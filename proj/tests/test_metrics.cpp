#include "doctest.h"

#include <cmath>

#include "moddnn/error.hpp"
#include "moddnn/metrics.hpp"

using namespace moddnn;

TEST_SUITE("metrics") {

TEST_CASE("rmse arithmetic") {
  CHECK(rmse({1, 2, 3, 4}) == doctest::Approx(std::sqrt(30.0 / 4.0)).epsilon(1e-15));
  CHECK(rmse({1, 2, 3, 4}) == doctest::Approx(2.7386).epsilon(1e-4));
  CHECK(rmse({0, 0, 0}) == 0.0);
  CHECK_THROWS_AS(rmse({}), DomainError);
}

TEST_CASE("interpolated quartiles") {
  const BoxplotStats s = boxplot_stats({1, 2, 3, 4});
  CHECK(s.q1 == 1.75);
  CHECK(s.median == 2.5);
  CHECK(s.q3 == 3.25);
  CHECK(s.outlier_count == 0);
  CHECK(s.whisker_lo == 1.0);
  CHECK(s.whisker_hi == 4.0);
}

TEST_CASE("all-equal values") {
  const BoxplotStats s = boxplot_stats({2.5, 2.5, 2.5, 2.5, 2.5});
  CHECK(s.q1 == 2.5);
  CHECK(s.median == 2.5);
  CHECK(s.q3 == 2.5);
  CHECK(s.outlier_count == 0);
}

TEST_CASE("outlier rule above 1.5 Q3") {
  const BoxplotStats s = boxplot_stats({1, 1, 1, 10});
  CHECK(s.q3 == 3.25);
  CHECK(s.outlier_count == 1);
  CHECK(s.whisker_hi == 1.0);
  CHECK(s.whisker_lo == 1.0);
}

TEST_CASE("Tukey rule") {
  // Q1 = 1, Q3 = 3.25, IQR = 2.25, upper fence 6.625
  const BoxplotStats s = boxplot_stats({1, 1, 1, 10}, WhiskerRule::Tukey);
  CHECK(s.outlier_count == 1);
  CHECK(s.whisker_hi == 1.0);
  // Q1 = 2, Q3 = 4: the Tukey fence is 7, the paper cut 6
  const BoxplotStats t = boxplot_stats({1, 2, 3, 4, 7}, WhiskerRule::Tukey);
  CHECK(t.outlier_count == 0);
  CHECK(t.whisker_hi == 7.0);
  CHECK(boxplot_stats({1, 2, 3, 4, 7}).outlier_count == 1);
  CHECK(boxplot_stats({1, 2, 3, 4, 6}).outlier_count == 0);  // strict inequality
  CHECK_THROWS_AS(boxplot_stats({}), DomainError);
}

TEST_CASE("cdf and p80") {
  const auto c = cdf_curve({0.5, 0.1, 0.3, 0.2, 0.4});
  CHECK(c.size() == 5);
  CHECK(cdf_percentile(c, 0.8) == 0.4);
  CHECK(c.back().fraction == 1.0);
  for (std::size_t i = 1; i < c.size(); ++i) {
    CHECK(c[i].value >= c[i - 1].value);
    CHECK(c[i].fraction >= c[i - 1].fraction);
  }
  const auto one = cdf_curve({1.7});
  CHECK(one.size() == 1);
  CHECK(one[0].fraction == 1.0);
  CHECK(cdf_percentile(one, 0.8) == 1.7);

  const auto dup = cdf_curve({0, 0, 0, 1, 2});
  CHECK(dup.size() == 3);
  CHECK(dup[0].fraction == doctest::Approx(0.6));
  CHECK(cdf_percentile(dup, 0.6) == 0.0);
  CHECK(cdf_percentile(dup, 0.8) == 1.0);
  CHECK_THROWS_AS(cdf_curve({}), DomainError);
}

TEST_CASE("subregions partition the field of view") {
  CHECK(subregion_index(-60.0) == 0);
  CHECK(subregion_index(-30.0) == 1);
  CHECK(subregion_index(-0.0001) == 1);
  CHECK(subregion_index(0.0) == 2);
  CHECK(subregion_index(29.999) == 2);
  CHECK(subregion_index(30.0) == 3);
  CHECK(subregion_index(60.0) == 3);
  CHECK(subregion_index(60.01) == -1);
  std::array<int, 4> hits{};
  for (int i = -600; i <= 600; ++i) {
    const int k = subregion_index(i / 10.0);
    REQUIRE(k >= 0);
    ++hits[std::size_t(k)];
  }
  CHECK(hits[0] + hits[1] + hits[2] + hits[3] == 1201);
  CHECK(hits[0] == 300);
  CHECK(hits[3] == 301);
}

TEST_CASE("zero-error report") {
  std::vector<SampleResult> s;
  for (int th = -60; th <= 60; ++th) s.push_back({double(th), double(th), 0});
  const MetricsReport r = build_report("oracle", s);
  CHECK(r.rmse == 0.0);
  CHECK(r.median == 0.0);
  CHECK(r.p80 == 0.0);
  for (const auto& b : r.subregion) {
    CHECK(b.q1 == 0.0);
    CHECK(b.median == 0.0);
    CHECK(b.q3 == 0.0);
    CHECK(b.whisker_lo == 0.0);
    CHECK(b.whisker_hi == 0.0);
    CHECK(b.outlier_count == 0);
  }
  const auto j = report_to_json(r);
  CHECK(j["schema"] == kReportSchema);
  CHECK(j["subregions"].size() == 4);
  CHECK(j["samples"].size() == 121);
}

TEST_CASE("report errors are absolute differences") {
  const MetricsReport r = build_report("m", {{10, 11, 0}, {-40, -42, 0}, {5, 2, 0}, {50, 54, 0}});
  CHECK(r.samples[1].error_deg == 2.0);
  CHECK(r.rmse == doctest::Approx(std::sqrt(30.0 / 4.0)));
  CHECK(r.subregion_count[0] == 1);
  CHECK(r.subregion_count[2] == 2);
  CHECK(r.subregion_count[3] == 1);
}

TEST_CASE("loss deviation history") {
  TrainHistory flat;
  flat.epoch_mean_loss = {0.5, 0.5};
  flat.batch_losses = {{0.5, 0.5}, {0.5, 0.5}};
  for (double v : loss_sd_history(flat)) CHECK(v == 0.0);

  // L_conv = 1.0; epoch 1: sqrt(((3-1)^2 + (1-1)^2)/2) = sqrt(2); epoch 2: sqrt((0.25+0.25)/2) = 0.5
  TrainHistory h;
  h.epoch_mean_loss = {2.0, 1.0};
  h.batch_losses = {{3.0, 1.0}, {0.5, 1.5}};
  const auto sd = loss_sd_history(h);
  REQUIRE(sd.size() == 2);
  CHECK(sd[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(sd[1] == doctest::Approx(0.5).epsilon(1e-15));
}

}
