#pragma once

#include "moddnn/angle_grid.hpp"
#include "moddnn/coarray.hpp"
#include "moddnn/moddnn.hpp"

namespace moddnn {

struct MusicConfig {
  int n_sources = 1;
};

struct MusicSpectrum {
  Spectrum values;          // 1 / ||E_n^H a(theta_l)||^2, all > 0
  bool degenerate = false;  // signal/noise eigenvalue gap below 1e-12 * trace
};

MusicSpectrum music_spectrum(const Covariance& R, const AngleGrid& grid, const MusicConfig& cfg = {});

struct MusicEstimate {
  AoaEstimate aoa;
  bool degenerate = false;
};

MusicEstimate music_estimate(const Covariance& R, const AngleGrid& grid, const MusicConfig& cfg = {},
                             bool interpolate = false);

}  // namespace moddnn
