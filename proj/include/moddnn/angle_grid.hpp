#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace moddnn {

// Real spectrum over the angle grid (CSS, calibrated spectrum or
// reconstruction). Index l corresponds to AngleGrid::angle(l).
using Spectrum = Eigen::VectorXd;

// Uniform discrete set of candidate azimuths, in degrees.
class AngleGrid {
 public:
  AngleGrid(double min_deg, double max_deg, double step_deg);

  double min_deg() const { return min_deg_; }
  double max_deg() const { return max_deg_; }
  double step_deg() const { return step_deg_; }
  std::size_t size() const { return size_; }

  // Endpoints are exact; interior points are min + l*(max-min)/(L-1).
  double angle(std::size_t l) const;
  std::vector<double> angles() const;

  bool contains(double theta_deg) const;
  // Index of the closest grid angle; ties resolve to the smaller angle.
  std::size_t nearest_index(double theta_deg) const;

  bool operator==(const AngleGrid& other) const = default;

 private:
  double min_deg_;
  double max_deg_;
  double step_deg_;
  std::size_t size_;
};

}  // namespace moddnn
