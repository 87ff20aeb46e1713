#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "moddnn/moddnn.hpp"

namespace moddnn {

double rmse(const std::vector<double>& errors_deg);

// Linearly interpolated order statistic (type 7); q in [0, 1].
double quantile(std::vector<double> values, double q);

enum class WhiskerRule {
  Paper,  // outliers are values above 1.5 * Q3
  Tukey,  // outliers are outside [Q1 - 1.5 IQR, Q3 + 1.5 IQR]
};

struct BoxplotStats {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double whisker_lo = 0.0;
  double whisker_hi = 0.0;
  std::size_t outlier_count = 0;
};

BoxplotStats boxplot_stats(const std::vector<double>& errors_deg, WhiskerRule rule = WhiskerRule::Paper);

struct CdfPoint {
  double value;
  double fraction;
};

// Empirical CDF at the sorted samples; duplicate values collapse to one node.
std::vector<CdfPoint> cdf_curve(const std::vector<double>& errors_deg);
// Smallest error whose cumulative fraction is at least p.
double cdf_percentile(const std::vector<CdfPoint>& cdf, double p);

// Sectors [-60,-30), [-30,0), [0,30), [30,60]. Returns -1 outside [-60, 60].
int subregion_index(double theta_deg);
extern const std::array<std::pair<double, double>, 4> kSubregions;

struct SampleResult {
  double theta_true = 0.0;
  double theta_est = 0.0;
  double error_deg = 0.0;
};

struct MetricsReport {
  std::string method;
  std::vector<SampleResult> samples;
  double rmse = 0.0;
  double median = 0.0;
  double p80 = 0.0;
  std::vector<CdfPoint> cdf;
  std::array<BoxplotStats, 4> subregion;
  std::array<std::size_t, 4> subregion_count{};
  std::size_t tie_count = 0;
  std::size_t degenerate_count = 0;
};

MetricsReport build_report(const std::string& method, std::vector<SampleResult> samples,
                           WhiskerRule rule = WhiskerRule::Paper);

constexpr const char* kReportSchema = "moddnn-report/1";
nlohmann::json report_to_json(const MetricsReport& report);

// SD_e = sqrt(mean_b (loss_b - L_conv)^2), L_conv the final-epoch mean.
std::vector<double> loss_sd_history(const TrainHistory& history);

}  // namespace moddnn
