#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "moddnn/checkpoint.hpp"
#include "moddnn/dataset.hpp"
#include "moddnn/error.hpp"
#include "moddnn/harness.hpp"
#include "moddnn/rng.hpp"
#include "moddnn/run_config.hpp"

using namespace moddnn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

void log_line(const std::string& msg) { std::cerr << msg << std::endl; }

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad number '" + s + "' for " + what);
  }
}

RunConfig config_or_default(const std::string& path) {
  return path.empty() ? RunConfig::preset_named("desk") : load_run_config(path);
}

struct SimulateArgs {
  std::string config, out, split = "all";
  std::uint64_t seed = 0;
  int threads = 1;
};

int run_simulate(const SimulateArgs& a) {
  RunConfig cfg = load_run_config(a.config);
  cfg.scenario.seed = a.seed;
  const Split split = parse_split(a.split);
  const Dataset ds = generate_dataset(cfg, split, a.threads);
  write_dataset(a.out, ds);
  log_line("wrote " + std::to_string(ds.records.size()) + " " + record_kind_name(ds.kind) + " records to " + a.out);
  return kExitOk;
}

struct TrainArgs {
  std::string data, val, config, out, history;
  bool deterministic = false;
};

int run_train(const TrainArgs& a) {
  RunConfig cfg = load_run_config(a.config);
  if (a.deterministic) cfg.train.deterministic = true;
  cfg.train.diagnostic_checkpoint = a.out + ".diverged";
  const Dataset train_set = read_dataset(a.data);
  std::optional<Dataset> val_set;
  if (!a.val.empty()) val_set = read_dataset(a.val);
  const TrainOutcome res = train_model(cfg, train_set, val_set ? &*val_set : nullptr, log_line);
  save_model(a.out, res.model);
  const std::string history_path = a.history.empty() ? a.out + ".history.json" : a.history;
  write_text(history_path, history_to_json(res.history).dump(1) + "\n");
  log_line("saved model to " + a.out + ", history to " + history_path);
  return kExitOk;
}

struct EvalArgs {
  std::string method, model, data, report, whisker;
  bool interpolate = false;
  int threads = 1;
};

int run_eval(const EvalArgs& a) {
  const Method method = parse_method(a.method);
  const Dataset ds = read_dataset(a.data);
  std::optional<ModDnnModel> model;
  if (!a.model.empty()) model = load_model(a.model);
  EvalConfig eval = ds.config.eval;
  eval.threads = a.threads;
  if (a.interpolate) eval.interpolate = true;
  if (a.whisker == "tukey") {
    eval.whisker_rule = WhiskerRule::Tukey;
  } else if (a.whisker == "paper") {
    eval.whisker_rule = WhiskerRule::Paper;
  } else if (!a.whisker.empty()) {
    throw ConfigError("--whisker must be paper or tukey");
  }
  const MetricsReport r = evaluate(ds, method, model, eval);
  write_text(a.report, report_to_json(r).dump(1) + "\n");
  log_line(std::string(method_name(method)) + ": n " + std::to_string(r.samples.size()) + " rmse " +
           format_number(r.rmse) + " median " + format_number(r.median) + " p80 " + format_number(r.p80));
  return kExitOk;
}

struct SweepArgs {
  std::string axis, values, methods, config, out, model;
};

int run_sweep(const SweepArgs& a) {
  const SweepAxis axis = parse_axis(a.axis);
  const RunConfig cfg = load_run_config(a.config);
  std::vector<double> values;
  if (a.values.empty()) {
    values = axis == SweepAxis::Snr ? cfg.sweep.snr_db : cfg.sweep.rho;
  } else {
    for (const auto& s : split_list(a.values)) values.push_back(parse_double(s, "--values"));
  }
  std::vector<Method> methods;
  for (const auto& s : split_list(a.methods)) methods.push_back(parse_method(s));
  std::optional<ModDnnModel> model;
  if (!a.model.empty()) model = load_model(a.model);
  const auto rows = sweep(axis, values, methods, cfg, model, log_line);
  write_text(a.out, sweep_csv(axis, rows));
  return kExitOk;
}

struct SpectrumArgs {
  std::string method, out, config, model, snr = "10";
  double theta = 0.0, rho = 1.0;
  std::uint64_t seed = 1;
};

int run_spectrum(const SpectrumArgs& a) {
  RunConfig cfg = config_or_default(a.config);
  const Method method = parse_method(a.method);
  SnrValue snr;
  if (a.snr != "inf" && a.snr != "none") snr = parse_double(a.snr, "--snr");
  if (!(a.rho >= 0.0 && a.rho <= 1.0)) throw ConfigError("--rho must lie in [0, 1]");
  std::optional<ModDnnModel> model;
  if (!a.model.empty()) model = load_model(a.model);

  const AngleGrid grid = cfg.grid();
  if (!grid.contains(a.theta)) throw ConfigError("--theta lies outside the angle grid");
  const ImpairmentModel imp = cfg.impairment.model(cfg.array.M);
  const CsiSample sample = synthesize_csi(grid, cfg.array, cfg.srs, imp, a.theta, snr, a.rho, derive_seed(a.seed, {0}));
  DatasetRecord rec;
  rec.theta_deg = a.theta;
  rec.snr_db = sample.snr_db;
  rec.rho = a.rho;
  rec.R = sample_covariance(sample).R;

  const Pipeline pipe(cfg, model);
  const Pipeline::Output out = pipe.spectrum(method, rec);
  write_text(a.out, spectrum_csv(grid, out.spectrum));
  const AoaEstimate est = estimate_aoa(out.spectrum, grid, cfg.eval.interpolate);
  log_line(std::string(method_name(method)) + ": peak at " + format_number(est.theta_deg) + " deg (true " +
           format_number(a.theta) + ")");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MoD-DNN AoA estimation: simulation, training and evaluation"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Generate a CSI or CSS dataset");
  c_sim->add_option("--config", sim.config, "Run config JSON")->required();
  c_sim->add_option("--out", sim.out, "Output dataset file")->required();
  c_sim->add_option("--seed", sim.seed, "Scenario seed")->required();
  c_sim->add_option("--split", sim.split, "train, val or all")->capture_default_str();
  c_sim->add_option("--threads", sim.threads, "Worker threads")->check(CLI::PositiveNumber);

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train a MoD-DNN model");
  c_train->add_option("--data", tr.data, "Training dataset")->required();
  c_train->add_option("--val", tr.val, "Validation dataset");
  c_train->add_option("--config", tr.config, "Run config JSON")->required();
  c_train->add_option("--out", tr.out, "Output model checkpoint")->required();
  c_train->add_option("--history", tr.history, "Training history JSON (default <out>.history.json)");
  c_train->add_flag("--deterministic", tr.deterministic, "Fixed-order gradient reduction");

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Evaluate an estimator on a dataset");
  c_eval->add_option("--method", ev.method, "moddnn, music, scg-only or css")->required();
  c_eval->add_option("--model", ev.model, "Model checkpoint");
  c_eval->add_option("--data", ev.data, "Dataset")->required();
  c_eval->add_option("--report", ev.report, "Report JSON")->required();
  c_eval->add_flag("--interpolate", ev.interpolate, "Parabolic peak interpolation");
  c_eval->add_option("--whisker", ev.whisker, "paper or tukey");
  c_eval->add_option("--threads", ev.threads, "Worker threads")->check(CLI::PositiveNumber);

  SweepArgs sw;
  auto* c_sweep = app.add_subcommand("sweep", "RMSE sweep over SNR or rho");
  c_sweep->add_option("--axis", sw.axis, "snr or rho")->required();
  c_sweep->add_option("--values", sw.values, "Comma-separated axis values");
  c_sweep->add_option("--methods", sw.methods, "Comma-separated methods")->required();
  c_sweep->add_option("--config", sw.config, "Run config JSON")->required();
  c_sweep->add_option("--out", sw.out, "Output CSV")->required();
  c_sweep->add_option("--model", sw.model, "Use this model instead of training one");

  SpectrumArgs sp;
  auto* c_spec = app.add_subcommand("spectrum", "Dump one spectrum as CSV");
  c_spec->add_option("--theta", sp.theta, "True angle in degrees")->required();
  c_spec->add_option("--snr", sp.snr, "SNR in dB, or inf for noiseless")->required();
  c_spec->add_option("--rho", sp.rho, "Impairment weight")->required();
  c_spec->add_option("--method", sp.method, "moddnn, music, scg-only or css")->required();
  c_spec->add_option("--out", sp.out, "Output CSV")->required();
  c_spec->add_option("--config", sp.config, "Run config JSON (default: desk preset)");
  c_spec->add_option("--model", sp.model, "Model checkpoint");
  c_spec->add_option("--seed", sp.seed, "Sample seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (c_sim->parsed()) return run_simulate(sim);
    if (c_train->parsed()) return run_train(tr);
    if (c_eval->parsed()) return run_eval(ev);
    if (c_sweep->parsed()) return run_sweep(sw);
    if (c_spec->parsed()) return run_spectrum(sp);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitIo;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << std::endl;
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return kExitConfig;
  }
  return kExitConfig;
}
