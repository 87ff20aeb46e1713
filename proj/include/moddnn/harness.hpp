#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "moddnn/dataset.hpp"
#include "moddnn/metrics.hpp"
#include "moddnn/moddnn.hpp"
#include "moddnn/music.hpp"
#include "moddnn/run_config.hpp"

namespace moddnn {

enum class Method { ModDnn, Music, ScgOnly, CssArgmax };

Method parse_method(const std::string& name);  // moddnn, music, scg-only, css
const char* method_name(Method method);

// Everything needed to turn one record into a spectrum with any method.
class Pipeline {
 public:
  // Without a trained model, scg-only uses lambda / mu / I from cfg.
  Pipeline(const RunConfig& cfg, std::optional<ModDnnModel> model);

  const AngleGrid& grid() const { return grid_; }
  const ProjectionMatrix& P() const { return P_; }
  const CoarrayManifold& manifold() const { return manifold_; }
  bool has_trained_model() const { return trained_; }
  const ModDnnModel& model() const { return model_; }

  struct Output {
    Spectrum spectrum;
    bool degenerate = false;
  };
  Output spectrum(Method method, const DatasetRecord& rec) const;

 private:
  AngleGrid grid_;
  int M_;
  ProjectionMatrix P_;
  CoarrayManifold manifold_;
  ModDnnModel model_;
  bool trained_ = false;
};

MetricsReport evaluate(const Dataset& data, Method method, const std::optional<ModDnnModel>& model,
                       const EvalConfig& eval);

// Normalized CSS inputs and Gaussian labels of every record.
std::vector<TrainSample> training_samples(const Dataset& data, double label_width_deg);

using LogFn = std::function<void(const std::string&)>;

struct TrainOutcome {
  ModDnnModel model;
  TrainHistory history;
};

// Builds the model from cfg (grid and array taken from the training set) and trains it.
TrainOutcome train_model(const RunConfig& cfg, const Dataset& train_set, const Dataset* val_set,
                         const LogFn& log = {});

nlohmann::json history_to_json(const TrainHistory& history);

enum class SweepAxis { Snr, Rho };
SweepAxis parse_axis(const std::string& name);

struct SweepRow {
  double axis_value = 0.0;
  std::string method;
  double rmse = 0.0;
  double median = 0.0;
  double p80 = 0.0;
  std::size_t n = 0;
};

// One validation set per axis value. When moddnn is requested without a
// model, one model is trained on the training split with the axis values
// cycled across symbols.
std::vector<SweepRow> sweep(SweepAxis axis, const std::vector<double>& values, const std::vector<Method>& methods,
                            const RunConfig& cfg, std::optional<ModDnnModel> model, const LogFn& log = {});

// Shortest round-trip decimal, locale independent.
std::string format_number(double v);

constexpr const char* kSweepCsvHeader = "# moddnn-sweep v1";
std::string sweep_csv(SweepAxis axis, const std::vector<SweepRow>& rows);

constexpr const char* kSpectrumCsvHeader = "# moddnn-spectrum v1";
std::string spectrum_csv(const AngleGrid& grid, const Spectrum& spectrum);

}  // namespace moddnn
