#include "moddnn/angle_grid.hpp"

#include <cmath>
#include <string>

#include "moddnn/error.hpp"

namespace moddnn {

AngleGrid::AngleGrid(double min_deg, double max_deg, double step_deg)
    : min_deg_(min_deg), max_deg_(max_deg), step_deg_(step_deg), size_(0) {
  if (!std::isfinite(min_deg) || !std::isfinite(max_deg) || !std::isfinite(step_deg)) {
    throw ConfigError("angle grid: non-finite bounds");
  }
  if (!(min_deg < max_deg)) throw ConfigError("angle grid: min_deg must be < max_deg");
  if (!(step_deg > 0.0)) throw ConfigError("angle grid: step_deg must be > 0");
  const double span = (max_deg - min_deg) / step_deg;
  const double rounded = std::round(span);
  if (std::abs(span - rounded) > 1e-6 * std::max(1.0, rounded)) {
    throw ConfigError("angle grid: (max-min)/step must be an integer, got " + std::to_string(span));
  }
  size_ = static_cast<std::size_t>(rounded) + 1;
  if (size_ < 2) throw ConfigError("angle grid: need at least two points");
}

double AngleGrid::angle(std::size_t l) const {
  if (l == 0) return min_deg_;
  if (l + 1 == size_) return max_deg_;
  return min_deg_ + (max_deg_ - min_deg_) * static_cast<double>(l) / static_cast<double>(size_ - 1);
}

std::vector<double> AngleGrid::angles() const {
  std::vector<double> out(size_);
  for (std::size_t l = 0; l < size_; ++l) out[l] = angle(l);
  return out;
}

bool AngleGrid::contains(double theta_deg) const {
  const double slack = 1e-9 * step_deg_;
  return theta_deg >= min_deg_ - slack && theta_deg <= max_deg_ + slack;
}

std::size_t AngleGrid::nearest_index(double theta_deg) const {
  if (!contains(theta_deg)) {
    throw DomainError("angle " + std::to_string(theta_deg) + " outside grid bounds");
  }
  const double pos = (theta_deg - min_deg_) / (max_deg_ - min_deg_) * static_cast<double>(size_ - 1);
  auto lo = static_cast<std::size_t>(std::max(0.0, std::floor(pos)));
  if (lo + 1 >= size_) return size_ - 1;
  const double d_lo = std::abs(theta_deg - angle(lo));
  const double d_hi = std::abs(angle(lo + 1) - theta_deg);
  return d_hi < d_lo ? lo + 1 : lo;
}

}  // namespace moddnn
