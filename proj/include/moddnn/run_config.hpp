#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "moddnn/angle_grid.hpp"
#include "moddnn/array_signal.hpp"
#include "moddnn/metrics.hpp"
#include "moddnn/moddnn.hpp"
#include "moddnn/scg.hpp"

namespace moddnn {

// nullopt is the noiseless sentinel (JSON null).
using SnrValue = std::optional<double>;

struct ImpairmentConfig {
  int order_Q = ImpairmentModel::kDefaultOrder;
  double phi_max = ImpairmentModel::kDefaultPhiMax;
  std::uint64_t seed = 2024;
  std::vector<double> rho{1.0};  // cycled by symbol index

  ImpairmentModel model(int M) const;
};

enum class RecordKind { Csi, Css };

struct ScenarioConfig {
  std::vector<SnrValue> snr_db{10.0};  // cycled by symbol index
  int symbols_per_angle = 45;
  int train_symbols = 40;
  int val_symbols = 5;
  RecordKind record_kind = RecordKind::Css;
  std::uint64_t seed = 1;
};

struct CalibratorConfig {
  int kernel_len = 32;
  std::vector<int> channels{1, 4, 8, 4, 1};
  double output_init_scale = 0.1;
  std::uint64_t seed = 11;
};

struct EvalConfig {
  bool interpolate = false;
  WhiskerRule whisker_rule = WhiskerRule::Paper;
  int threads = 1;
};

struct SweepConfig {
  std::vector<double> snr_db{0.0, 5.0, 10.0, 15.0, 20.0};
  std::vector<double> rho{0.0, 0.25, 0.5, 0.75, 1.0};
};

struct RunConfig {
  std::string preset = "desk";
  double grid_min = -60.0;
  double grid_max = 60.0;
  double grid_step = 1.0;
  ArrayConfig array;
  SrsConfig srs;
  ImpairmentConfig impairment;
  ScenarioConfig scenario;
  double label_width_deg = 1.0;
  ScgConfig scg;  // lambda is the initial value of the trainable weight
  int unroll_I = 3;
  int train_n_cg = 10;
  CalibratorConfig calibrator;
  TrainConfig train;
  EvalConfig eval;
  SweepConfig sweep;

  AngleGrid grid() const { return AngleGrid(grid_min, grid_max, grid_step); }
  ModelSpec model_spec() const;
  // Throws ConfigError on any violated invariant.
  void validate() const;

  // desk: 1 deg grid, K = 64; full: 0.1 deg grid, K = floor(B/df);
  // chamber: 1 deg grid, 450 symbols per angle.
  static RunConfig preset_named(const std::string& name);
};

// Strict parse: unknown keys and wrong types raise ConfigError. Sections
// override the named preset (default "desk").
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);
nlohmann::json run_config_to_json(const RunConfig& cfg);

const char* record_kind_name(RecordKind kind);

}  // namespace moddnn
