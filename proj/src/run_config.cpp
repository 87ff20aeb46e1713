#include "moddnn/run_config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>

#include "moddnn/error.hpp"

namespace moddnn {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& section, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError("config: section '" + section + "' must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.count(key)) throw ConfigError("config: unknown key '" + section + "." + key + "'");
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& section) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError("");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError("");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_unsigned() == false && v.get<std::int64_t>() < 0) throw ConfigError("");
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError("");
    }
    out = v.get<T>();
  } catch (const std::exception&) {
    throw ConfigError("config: bad type for '" + section + "." + key + "'");
  }
}

std::vector<SnrValue> read_snr_list(const json& v, const std::string& where) {
  auto one = [&](const json& x) -> SnrValue {
    if (x.is_null()) return std::nullopt;
    if (!x.is_number()) throw ConfigError("config: '" + where + "' entries must be numbers or null");
    return x.get<double>();
  };
  std::vector<SnrValue> out;
  if (v.is_array()) {
    for (const auto& x : v) out.push_back(one(x));
  } else {
    out.push_back(one(v));
  }
  if (out.empty()) throw ConfigError("config: '" + where + "' must not be empty");
  return out;
}

std::vector<double> read_number_list(const json& v, const std::string& where) {
  std::vector<double> out;
  if (v.is_number()) {
    out.push_back(v.get<double>());
  } else if (v.is_array()) {
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError("config: '" + where + "' entries must be numbers");
      out.push_back(x.get<double>());
    }
  } else {
    throw ConfigError("config: '" + where + "' must be a number or a list of numbers");
  }
  if (out.empty()) throw ConfigError("config: '" + where + "' must not be empty");
  return out;
}

json snr_to_json(const std::vector<SnrValue>& v) {
  auto one = [](const SnrValue& x) -> json { return x ? json(*x) : json(nullptr); };
  if (v.size() == 1) return one(v[0]);
  json arr = json::array();
  for (const auto& x : v) arr.push_back(one(x));
  return arr;
}

}  // namespace

ImpairmentModel ImpairmentConfig::model(int M) const { return ImpairmentModel::draw(M, order_Q, phi_max, seed); }

const char* record_kind_name(RecordKind kind) { return kind == RecordKind::Csi ? "csi" : "css"; }

ModelSpec RunConfig::model_spec() const {
  ModelSpec spec;
  spec.shape.channels = calibrator.channels;
  spec.shape.kernel_len = calibrator.kernel_len;
  spec.output_init_scale = calibrator.output_init_scale;
  spec.seed = calibrator.seed;
  spec.unroll_I = unroll_I;
  spec.lambda_init = scg.lambda;
  spec.scg = scg;
  spec.train_n_cg = train_n_cg;
  return spec;
}

void RunConfig::validate() const {
  (void)grid();
  array.validate();
  srs.validate();
  scg.validate();
  train.validate();
  if (impairment.order_Q < 0) throw ConfigError("config: impairment.order_Q must be >= 0");
  if (!(impairment.phi_max >= 0.0)) throw ConfigError("config: impairment.phi_max must be >= 0");
  for (double r : impairment.rho) {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("config: impairment.rho must lie in [0, 1]");
  }
  for (const auto& s : scenario.snr_db) {
    if (s && !std::isfinite(*s)) throw ConfigError("config: scenario.snr_db must be finite or null");
  }
  if (scenario.symbols_per_angle < 1) throw ConfigError("config: scenario.symbols_per_angle must be >= 1");
  if (scenario.train_symbols < 0 || scenario.val_symbols < 0 ||
      scenario.train_symbols + scenario.val_symbols > scenario.symbols_per_angle) {
    throw ConfigError("config: train_symbols + val_symbols must not exceed symbols_per_angle");
  }
  if (!(label_width_deg >= 0.0)) throw ConfigError("config: label.width_deg must be >= 0");
  if (unroll_I < 1 || unroll_I > 10) throw ConfigError("config: unroll.I must lie in [1, 10]");
  if (train_n_cg < 1) throw ConfigError("config: unroll.train_n_cg must be >= 1");
  if (!(scg.lambda > 0.0)) throw ConfigError("config: scg.lambda must be > 0 (initial trainable value)");
  if (calibrator.kernel_len < 1) throw ConfigError("config: calibrator.kernel_len must be >= 1");
  if (calibrator.channels.size() < 2 || calibrator.channels.front() != 1 || calibrator.channels.back() != 1) {
    throw ConfigError("config: calibrator.channels must start and end with 1");
  }
  for (int c : calibrator.channels) {
    if (c < 1) throw ConfigError("config: calibrator.channels entries must be >= 1");
  }
  if (eval.threads < 1) throw ConfigError("config: eval.threads must be >= 1");
  if (sweep.snr_db.empty() || sweep.rho.empty()) throw ConfigError("config: sweep lists must not be empty");
}

RunConfig RunConfig::preset_named(const std::string& name) {
  RunConfig cfg;
  cfg.preset = name;
  if (name == "desk") {
    cfg.srs.K = 64;
  } else if (name == "full") {
    cfg.grid_step = 0.1;
    cfg.srs.K = cfg.srs.full_scale_K();
  } else if (name == "chamber") {
    cfg.srs.K = 64;
    cfg.scenario.symbols_per_angle = 450;
    cfg.scenario.train_symbols = 400;
    cfg.scenario.val_symbols = 50;
  } else {
    throw ConfigError("config: unknown preset '" + name + "'");
  }
  return cfg;
}

RunConfig parse_run_config(const json& j) {
  check_keys(j, "<root>",
             {"preset", "grid", "array", "srs", "impairment", "scenario", "label", "scg", "unroll", "calibrator",
              "train", "eval", "sweep"});
  std::string preset = "desk";
  read(j, "preset", preset, "<root>");
  RunConfig cfg = RunConfig::preset_named(preset);

  if (j.contains("grid")) {
    const json& s = j["grid"];
    check_keys(s, "grid", {"min_deg", "max_deg", "step_deg"});
    read(s, "min_deg", cfg.grid_min, "grid");
    read(s, "max_deg", cfg.grid_max, "grid");
    read(s, "step_deg", cfg.grid_step, "grid");
  }
  if (j.contains("array")) {
    const json& s = j["array"];
    check_keys(s, "array", {"M", "spacing_wavelengths"});
    read(s, "M", cfg.array.M, "array");
    read(s, "spacing_wavelengths", cfg.array.spacing_wavelengths, "array");
  }
  if (j.contains("srs")) {
    const json& s = j["srs"];
    check_keys(s, "srs", {"fc_hz", "delta_f_hz", "bandwidth_hz", "K", "tx_power_dbm"});
    read(s, "fc_hz", cfg.srs.fc_hz, "srs");
    read(s, "delta_f_hz", cfg.srs.delta_f_hz, "srs");
    read(s, "bandwidth_hz", cfg.srs.bandwidth_hz, "srs");
    read(s, "K", cfg.srs.K, "srs");
    read(s, "tx_power_dbm", cfg.srs.tx_power_dbm, "srs");
  }
  if (j.contains("impairment")) {
    const json& s = j["impairment"];
    check_keys(s, "impairment", {"order_Q", "phi_max", "seed", "rho"});
    read(s, "order_Q", cfg.impairment.order_Q, "impairment");
    read(s, "phi_max", cfg.impairment.phi_max, "impairment");
    read(s, "seed", cfg.impairment.seed, "impairment");
    if (s.contains("rho")) cfg.impairment.rho = read_number_list(s["rho"], "impairment.rho");
  }
  if (j.contains("scenario")) {
    const json& s = j["scenario"];
    check_keys(s, "scenario", {"snr_db", "symbols_per_angle", "train_symbols", "val_symbols", "record_kind", "seed"});
    if (s.contains("snr_db")) cfg.scenario.snr_db = read_snr_list(s["snr_db"], "scenario.snr_db");
    read(s, "symbols_per_angle", cfg.scenario.symbols_per_angle, "scenario");
    read(s, "train_symbols", cfg.scenario.train_symbols, "scenario");
    read(s, "val_symbols", cfg.scenario.val_symbols, "scenario");
    read(s, "seed", cfg.scenario.seed, "scenario");
    if (s.contains("record_kind")) {
      std::string kind;
      read(s, "record_kind", kind, "scenario");
      if (kind == "csi") {
        cfg.scenario.record_kind = RecordKind::Csi;
      } else if (kind == "css") {
        cfg.scenario.record_kind = RecordKind::Css;
      } else {
        throw ConfigError("config: scenario.record_kind must be 'csi' or 'css'");
      }
    }
  }
  if (j.contains("label")) {
    const json& s = j["label"];
    check_keys(s, "label", {"width_deg"});
    read(s, "width_deg", cfg.label_width_deg, "label");
  }
  if (j.contains("scg")) {
    const json& s = j["scg"];
    check_keys(s, "scg", {"lambda", "mu", "epsilon", "n_cg_max", "tol_gamma_cg"});
    read(s, "lambda", cfg.scg.lambda, "scg");
    read(s, "mu", cfg.scg.mu, "scg");
    read(s, "epsilon", cfg.scg.epsilon, "scg");
    read(s, "n_cg_max", cfg.scg.n_cg_max, "scg");
    read(s, "tol_gamma_cg", cfg.scg.tol_gamma_cg, "scg");
  }
  if (j.contains("unroll")) {
    const json& s = j["unroll"];
    check_keys(s, "unroll", {"I", "train_n_cg"});
    read(s, "I", cfg.unroll_I, "unroll");
    read(s, "train_n_cg", cfg.train_n_cg, "unroll");
  }
  if (j.contains("calibrator")) {
    const json& s = j["calibrator"];
    check_keys(s, "calibrator", {"kernel_len", "channels", "output_init_scale", "seed"});
    read(s, "kernel_len", cfg.calibrator.kernel_len, "calibrator");
    read(s, "output_init_scale", cfg.calibrator.output_init_scale, "calibrator");
    read(s, "seed", cfg.calibrator.seed, "calibrator");
    if (s.contains("channels")) {
      cfg.calibrator.channels.clear();
      if (!s["channels"].is_array()) throw ConfigError("config: calibrator.channels must be a list");
      for (const auto& c : s["channels"]) {
        if (!c.is_number_integer()) throw ConfigError("config: calibrator.channels entries must be integers");
        cfg.calibrator.channels.push_back(c.get<int>());
      }
    }
  }
  if (j.contains("train")) {
    const json& s = j["train"];
    check_keys(s, "train",
               {"epochs", "batch_size", "lr0", "step_epochs", "gamma_lr", "beta1", "beta2", "eps_adam", "seed",
                "deterministic", "threads"});
    read(s, "epochs", cfg.train.epochs, "train");
    read(s, "batch_size", cfg.train.batch_size, "train");
    read(s, "lr0", cfg.train.schedule.lr0, "train");
    read(s, "step_epochs", cfg.train.schedule.step_epochs, "train");
    read(s, "gamma_lr", cfg.train.schedule.gamma_lr, "train");
    read(s, "beta1", cfg.train.beta1, "train");
    read(s, "beta2", cfg.train.beta2, "train");
    read(s, "eps_adam", cfg.train.eps_adam, "train");
    read(s, "seed", cfg.train.seed, "train");
    read(s, "deterministic", cfg.train.deterministic, "train");
    read(s, "threads", cfg.train.threads, "train");
  }
  if (j.contains("eval")) {
    const json& s = j["eval"];
    check_keys(s, "eval", {"interpolate", "whisker_rule", "threads"});
    read(s, "interpolate", cfg.eval.interpolate, "eval");
    read(s, "threads", cfg.eval.threads, "eval");
    if (s.contains("whisker_rule")) {
      std::string rule;
      read(s, "whisker_rule", rule, "eval");
      if (rule == "paper") {
        cfg.eval.whisker_rule = WhiskerRule::Paper;
      } else if (rule == "tukey") {
        cfg.eval.whisker_rule = WhiskerRule::Tukey;
      } else {
        throw ConfigError("config: eval.whisker_rule must be 'paper' or 'tukey'");
      }
    }
  }
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    check_keys(s, "sweep", {"snr_db", "rho"});
    if (s.contains("snr_db")) cfg.sweep.snr_db = read_number_list(s["snr_db"], "sweep.snr_db");
    if (s.contains("rho")) cfg.sweep.rho = read_number_list(s["rho"], "sweep.rho");
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path + " is not valid JSON: " + e.what());
  }
  return parse_run_config(j);
}

json run_config_to_json(const RunConfig& c) {
  json j;
  j["preset"] = c.preset;
  j["grid"] = {{"min_deg", c.grid_min}, {"max_deg", c.grid_max}, {"step_deg", c.grid_step}};
  j["array"] = {{"M", c.array.M}, {"spacing_wavelengths", c.array.spacing_wavelengths}};
  j["srs"] = {{"fc_hz", c.srs.fc_hz},
              {"delta_f_hz", c.srs.delta_f_hz},
              {"bandwidth_hz", c.srs.bandwidth_hz},
              {"K", c.srs.K},
              {"tx_power_dbm", c.srs.tx_power_dbm}};
  j["impairment"] = {{"order_Q", c.impairment.order_Q},
                     {"phi_max", c.impairment.phi_max},
                     {"seed", c.impairment.seed},
                     {"rho", c.impairment.rho.size() == 1 ? json(c.impairment.rho[0]) : json(c.impairment.rho)}};
  j["scenario"] = {{"snr_db", snr_to_json(c.scenario.snr_db)},
                   {"symbols_per_angle", c.scenario.symbols_per_angle},
                   {"train_symbols", c.scenario.train_symbols},
                   {"val_symbols", c.scenario.val_symbols},
                   {"record_kind", record_kind_name(c.scenario.record_kind)},
                   {"seed", c.scenario.seed}};
  j["label"] = {{"width_deg", c.label_width_deg}};
  j["scg"] = {{"lambda", c.scg.lambda},
              {"mu", c.scg.mu},
              {"epsilon", c.scg.epsilon},
              {"n_cg_max", c.scg.n_cg_max},
              {"tol_gamma_cg", c.scg.tol_gamma_cg}};
  j["unroll"] = {{"I", c.unroll_I}, {"train_n_cg", c.train_n_cg}};
  j["calibrator"] = {{"kernel_len", c.calibrator.kernel_len},
                     {"channels", c.calibrator.channels},
                     {"output_init_scale", c.calibrator.output_init_scale},
                     {"seed", c.calibrator.seed}};
  j["train"] = {{"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"lr0", c.train.schedule.lr0},
                {"step_epochs", c.train.schedule.step_epochs},
                {"gamma_lr", c.train.schedule.gamma_lr},
                {"beta1", c.train.beta1},
                {"beta2", c.train.beta2},
                {"eps_adam", c.train.eps_adam},
                {"seed", c.train.seed},
                {"deterministic", c.train.deterministic},
                {"threads", c.train.threads}};
  j["eval"] = {{"interpolate", c.eval.interpolate},
               {"whisker_rule", c.eval.whisker_rule == WhiskerRule::Paper ? "paper" : "tukey"},
               {"threads", c.eval.threads}};
  j["sweep"] = {{"snr_db", c.sweep.snr_db}, {"rho", c.sweep.rho}};
  return j;
}

}  // namespace moddnn
