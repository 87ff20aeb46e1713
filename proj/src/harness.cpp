#include "moddnn/harness.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <thread>

#include "moddnn/error.hpp"

namespace moddnn {

using nlohmann::json;

Method parse_method(const std::string& name) {
  if (name == "moddnn") return Method::ModDnn;
  if (name == "music") return Method::Music;
  if (name == "scg-only") return Method::ScgOnly;
  if (name == "css") return Method::CssArgmax;
  throw ConfigError("unknown method '" + name + "' (moddnn, music, scg-only, css)");
}

const char* method_name(Method method) {
  switch (method) {
    case Method::ModDnn:
      return "moddnn";
    case Method::Music:
      return "music";
    case Method::ScgOnly:
      return "scg-only";
    case Method::CssArgmax:
      break;
  }
  return "css";
}

Pipeline::Pipeline(const RunConfig& cfg, std::optional<ModDnnModel> model)
    : grid_(cfg.grid()),
      M_(cfg.array.M),
      P_(grid_, M_),
      manifold_(grid_, M_),
      model_(model ? std::move(*model) : make_model(grid_, cfg.model_spec())),
      trained_(model.has_value()) {
  if (!(model_.grid == grid_)) throw ConfigError("model grid does not match the dataset grid");
}

Pipeline::Output Pipeline::spectrum(Method method, const DatasetRecord& rec) const {
  Output out;
  switch (method) {
    case Method::Music: {
      MusicSpectrum s = music_spectrum(record_covariance(rec), grid_);
      out.spectrum = std::move(s.values);
      out.degenerate = s.degenerate;
      break;
    }
    case Method::CssArgmax:
      out.spectrum = record_css(rec, manifold_);
      break;
    case Method::ModDnn:
      if (!trained_) throw ConfigError("method moddnn needs a trained model");
      out.spectrum = moddnn_forward(model_, normalize_css(record_css(rec, manifold_)), P_, ForwardMode::Eval);
      break;
    case Method::ScgOnly:
      out.spectrum =
          moddnn_forward(model_, normalize_css(record_css(rec, manifold_)), P_, ForwardMode::Eval, nullptr, true);
      break;
  }
  if (!out.spectrum.allFinite()) throw NumericalError(std::string(method_name(method)) + ": non-finite spectrum");
  return out;
}

MetricsReport evaluate(const Dataset& data, Method method, const std::optional<ModDnnModel>& model,
                       const EvalConfig& eval) {
  if (data.records.empty()) throw ConfigError("evaluate: dataset has no records");
  if (method == Method::ModDnn && !model) throw ConfigError("evaluate: method moddnn requires --model");
  const Pipeline pipe(data.config, model);

  const std::size_t n = data.records.size();
  std::vector<SampleResult> samples(n);
  std::vector<char> ties(n, 0);
  std::vector<char> degenerate(n, 0);
  auto run = [&](std::size_t i) {
    const DatasetRecord& rec = data.records[i];
    const Pipeline::Output out = pipe.spectrum(method, rec);
    const AoaEstimate est = estimate_aoa(out.spectrum, pipe.grid(), eval.interpolate);
    samples[i] = SampleResult{rec.theta_deg, est.theta_deg, std::abs(est.theta_deg - rec.theta_deg)};
    ties[i] = est.tie;
    degenerate[i] = out.degenerate;
  };
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(eval.threads), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) run(i);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < n; i += workers) run(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  MetricsReport report = build_report(method_name(method), std::move(samples), eval.whisker_rule);
  for (std::size_t i = 0; i < n; ++i) {
    report.tie_count += static_cast<std::size_t>(ties[i]);
    report.degenerate_count += static_cast<std::size_t>(degenerate[i]);
  }
  return report;
}

std::vector<TrainSample> training_samples(const Dataset& data, double label_width_deg) {
  const AngleGrid grid = data.config.grid();
  const CoarrayManifold manifold(grid, data.config.array.M);
  std::vector<TrainSample> out;
  out.reserve(data.records.size());
  for (const auto& rec : data.records) {
    out.push_back({normalize_css(record_css(rec, manifold)), label_spectrum(grid, rec.theta_deg, label_width_deg)});
  }
  return out;
}

TrainOutcome train_model(const RunConfig& cfg, const Dataset& train_set, const Dataset* val_set, const LogFn& log) {
  if (train_set.records.empty()) throw ConfigError("train: training set is empty");
  const AngleGrid grid = train_set.config.grid();
  if (val_set && !(val_set->config.grid() == grid)) throw ConfigError("train: validation grid differs from training grid");
  const ProjectionMatrix P(grid, train_set.config.array.M);

  TrainOutcome out{make_model(grid, cfg.model_spec()), {}};
  const auto data = training_samples(train_set, cfg.label_width_deg);
  std::vector<TrainSample> val;
  if (val_set) val = training_samples(*val_set, cfg.label_width_deg);

  EpochCallback cb;
  if (log) {
    cb = [&](int epoch, const TrainHistory& h) {
      std::ostringstream msg;
      msg << "epoch " << epoch + 1 << "/" << cfg.train.epochs << " loss " << h.epoch_mean_loss.back();
      if (!h.val_loss.empty()) msg << " val " << h.val_loss.back();
      msg << " lambda " << h.lambda.back() << " lr " << h.learning_rate.back();
      log(msg.str());
    };
  }
  out.history = train(out.model, P, data, cfg.train, val_set ? &val : nullptr, cb);
  return out;
}

json history_to_json(const TrainHistory& h) {
  return json{{"schema", "moddnn-history/1"},
              {"epoch_mean_loss", h.epoch_mean_loss},
              {"epoch_loss_sd", h.epoch_loss_sd},
              {"learning_rate", h.learning_rate},
              {"val_loss", h.val_loss},
              {"lambda", h.lambda},
              {"batch_losses", h.batch_losses}};
}

SweepAxis parse_axis(const std::string& name) {
  if (name == "snr") return SweepAxis::Snr;
  if (name == "rho") return SweepAxis::Rho;
  throw ConfigError("unknown sweep axis '" + name + "' (snr, rho)");
}

std::vector<SweepRow> sweep(SweepAxis axis, const std::vector<double>& values, const std::vector<Method>& methods,
                            const RunConfig& cfg, std::optional<ModDnnModel> model, const LogFn& log) {
  if (values.empty()) throw ConfigError("sweep: no axis values");
  if (methods.empty()) throw ConfigError("sweep: no methods");
  auto with_axis = [&](RunConfig c, const std::vector<double>& v) {
    if (axis == SweepAxis::Snr) {
      c.scenario.snr_db.assign(v.begin(), v.end());
    } else {
      c.impairment.rho = v;
    }
    c.validate();
    return c;
  };

  bool needs_model = false;
  for (Method m : methods) needs_model |= (m == Method::ModDnn);
  if (needs_model && !model) {
    if (log) log("sweep: training one model over all axis values");
    const Dataset train_set = generate_dataset(with_axis(cfg, values), Split::Train, cfg.train.threads);
    model = train_model(cfg, train_set, nullptr, log).model;
  }

  std::vector<SweepRow> rows;
  for (double v : values) {
    const Dataset val = generate_dataset(with_axis(cfg, {v}), Split::Val, cfg.eval.threads);
    for (Method m : methods) {
      const MetricsReport r = evaluate(val, m, model, cfg.eval);
      rows.push_back({v, method_name(m), r.rmse, r.median, r.p80, r.samples.size()});
      if (log) log("sweep: " + format_number(v) + " " + method_name(m) + " rmse " + format_number(r.rmse));
    }
  }
  return rows;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string sweep_csv(SweepAxis axis, const std::vector<SweepRow>& rows) {
  std::string out = std::string(kSweepCsvHeader) + " axis=" + (axis == SweepAxis::Snr ? "snr" : "rho") + "\n";
  out += "axis_value,method,rmse,median,p80,n\n";
  for (const auto& r : rows) {
    out += format_number(r.axis_value) + "," + r.method + "," + format_number(r.rmse) + "," +
           format_number(r.median) + "," + format_number(r.p80) + "," + std::to_string(r.n) + "\n";
  }
  return out;
}

std::string spectrum_csv(const AngleGrid& grid, const Spectrum& spectrum) {
  if (static_cast<std::size_t>(spectrum.size()) != grid.size()) throw ShapeError("spectrum_csv: length mismatch");
  std::string out = std::string(kSpectrumCsvHeader) + "\nangle_deg,value\n";
  for (std::size_t l = 0; l < grid.size(); ++l) {
    out += format_number(grid.angle(l)) + "," + format_number(spectrum(static_cast<Eigen::Index>(l))) + "\n";
  }
  return out;
}

}  // namespace moddnn
