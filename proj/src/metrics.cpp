#include "moddnn/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "moddnn/error.hpp"

namespace moddnn {

const std::array<std::pair<double, double>, 4> kSubregions{{{-60.0, -30.0}, {-30.0, 0.0}, {0.0, 30.0}, {30.0, 60.0}}};

double rmse(const std::vector<double>& errors_deg) {
  if (errors_deg.empty()) throw DomainError("rmse: empty error list");
  double acc = 0.0;
  for (double e : errors_deg) acc += e * e;
  return std::sqrt(acc / static_cast<double>(errors_deg.size()));
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw DomainError("quantile: empty list");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

BoxplotStats boxplot_stats(const std::vector<double>& errors_deg, WhiskerRule rule) {
  if (errors_deg.empty()) throw DomainError("boxplot_stats: empty error list");
  BoxplotStats s;
  s.q1 = quantile(errors_deg, 0.25);
  s.median = quantile(errors_deg, 0.5);
  s.q3 = quantile(errors_deg, 0.75);
  double lo_fence = -INFINITY;
  double hi_fence = 1.5 * s.q3;
  if (rule == WhiskerRule::Tukey) {
    const double iqr = s.q3 - s.q1;
    lo_fence = s.q1 - 1.5 * iqr;
    hi_fence = s.q3 + 1.5 * iqr;
  }
  bool any = false;
  for (double e : errors_deg) {
    if (e > hi_fence || e < lo_fence) {
      ++s.outlier_count;
      continue;
    }
    if (!any) {
      s.whisker_lo = s.whisker_hi = e;
      any = true;
    } else {
      s.whisker_lo = std::min(s.whisker_lo, e);
      s.whisker_hi = std::max(s.whisker_hi, e);
    }
  }
  return s;
}

std::vector<CdfPoint> cdf_curve(const std::vector<double>& errors_deg) {
  if (errors_deg.empty()) throw DomainError("cdf_curve: empty error list");
  std::vector<double> v = errors_deg;
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  std::vector<CdfPoint> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i + 1 < v.size() && v[i + 1] == v[i]) continue;
    out.push_back({v[i], static_cast<double>(i + 1) / n});
  }
  return out;
}

double cdf_percentile(const std::vector<CdfPoint>& cdf, double p) {
  if (cdf.empty()) throw DomainError("cdf_percentile: empty curve");
  for (const auto& pt : cdf) {
    if (pt.fraction >= p - 1e-12) return pt.value;
  }
  return cdf.back().value;
}

int subregion_index(double theta_deg) {
  if (theta_deg < -60.0 || theta_deg > 60.0) return -1;
  if (theta_deg < -30.0) return 0;
  if (theta_deg < 0.0) return 1;
  if (theta_deg < 30.0) return 2;
  return 3;
}

MetricsReport build_report(const std::string& method, std::vector<SampleResult> samples, WhiskerRule rule) {
  if (samples.empty()) throw DomainError("build_report: no samples");
  MetricsReport r;
  r.method = method;
  std::vector<double> errors;
  std::array<std::vector<double>, 4> sector;
  for (auto& s : samples) {
    s.error_deg = std::abs(s.theta_est - s.theta_true);
    errors.push_back(s.error_deg);
    const int k = subregion_index(s.theta_true);
    if (k >= 0) sector[static_cast<std::size_t>(k)].push_back(s.error_deg);
  }
  r.samples = std::move(samples);
  r.rmse = rmse(errors);
  r.median = quantile(errors, 0.5);
  r.cdf = cdf_curve(errors);
  r.p80 = cdf_percentile(r.cdf, 0.8);
  for (std::size_t k = 0; k < 4; ++k) {
    r.subregion_count[k] = sector[k].size();
    if (!sector[k].empty()) r.subregion[k] = boxplot_stats(sector[k], rule);
  }
  return r;
}

nlohmann::json report_to_json(const MetricsReport& r) {
  using nlohmann::json;
  json j;
  j["schema"] = kReportSchema;
  j["method"] = r.method;
  j["summary"] = {{"n", r.samples.size()}, {"rmse", r.rmse},         {"median", r.median},
                  {"p80", r.p80},          {"ties", r.tie_count}, {"degenerate", r.degenerate_count}};
  json cdf = json::array();
  for (const auto& pt : r.cdf) cdf.push_back({pt.value, pt.fraction});
  j["cdf"] = std::move(cdf);
  json sectors = json::array();
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& b = r.subregion[k];
    sectors.push_back({{"range", {kSubregions[k].first, kSubregions[k].second}},
                       {"n", r.subregion_count[k]},
                       {"q1", b.q1},
                       {"median", b.median},
                       {"q3", b.q3},
                       {"whisker_lo", b.whisker_lo},
                       {"whisker_hi", b.whisker_hi},
                       {"outliers", b.outlier_count}});
  }
  j["subregions"] = std::move(sectors);
  json samples = json::array();
  for (const auto& s : r.samples) samples.push_back({s.theta_true, s.theta_est, s.error_deg});
  j["samples"] = std::move(samples);
  j["sample_fields"] = {"theta_true", "theta_est", "error_deg"};
  return j;
}

std::vector<double> loss_sd_history(const TrainHistory& history) {
  std::vector<double> out;
  if (history.epoch_mean_loss.empty()) return out;
  const double conv = history.epoch_mean_loss.back();
  for (const auto& batches : history.batch_losses) {
    double acc = 0.0;
    for (double l : batches) acc += (l - conv) * (l - conv);
    out.push_back(batches.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(batches.size())));
  }
  return out;
}

}  // namespace moddnn
