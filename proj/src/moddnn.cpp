#include "moddnn/moddnn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <exception>
#include <numeric>
#include <random>
#include <thread>

#include "moddnn/checkpoint.hpp"
#include "moddnn/error.hpp"
#include "moddnn/metrics.hpp"
#include "moddnn/rng.hpp"

namespace moddnn {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::uint64_t model_fingerprint(const ModDnnModel& model) {
  std::uint64_t h = model.calibrator.fingerprint();
  std::uint64_t raw;
  std::memcpy(&raw, &model.lambda_raw, sizeof raw);
  return splitmix64(h ^ raw);
}

template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Loss and flattened gradient (calibrator params then lambda_raw) of one sample.
double sample_gradient(const ModDnnModel& model, const ProjectionMatrix& P, const TrainSample& s,
                       std::vector<double>& flat) {
  IterTrace trace;
  const Spectrum out = moddnn_forward(model, s.input, P, ForwardMode::Train, &trace);
  const LossValue loss = mse_loss(out, s.label);
  const ModelGradient g = moddnn_backward(model, P, trace, loss.grad);
  flat = g.d_calibrator.flatten();
  flat.push_back(g.d_lambda_raw);
  return loss.value;
}

}  // namespace

double lambda_from_raw(double raw) {
  // softplus without overflow
  const double sp = raw > 30.0 ? raw + std::log1p(std::exp(-raw)) : std::log1p(std::exp(raw));
  return sp + kLambdaFloor;
}

double raw_from_lambda(double lambda) {
  const double target = lambda - kLambdaFloor;
  if (!(target > 0.0)) throw ConfigError("lambda must exceed " + std::to_string(kLambdaFloor));
  return target > 30.0 ? target + std::log(-std::expm1(-target)) : std::log(std::expm1(target));
}

ScgConfig ModDnnModel::solver_config() const {
  ScgConfig cfg = scg;
  cfg.lambda = lambda();
  return cfg;
}

void ModDnnModel::validate() const {
  calibrator.validate();
  if (unroll_I < 1 || unroll_I > 10) throw ConfigError("unroll_I must lie in [1, 10]");
  if (train_n_cg < 1) throw ConfigError("train_n_cg must be >= 1");
  if (!std::isfinite(lambda_raw)) throw ConfigError("lambda_raw is not finite");
  solver_config().validate();
}

ModDnnModel make_model(const AngleGrid& grid, const ModelSpec& spec) {
  ModDnnModel model;
  model.calibrator = init_params(spec.seed, spec.shape, spec.output_init_scale);
  model.lambda_raw = raw_from_lambda(spec.lambda_init);
  model.unroll_I = spec.unroll_I;
  model.grid = grid;
  model.scg = spec.scg;
  model.train_n_cg = spec.train_n_cg;
  model.validate();
  return model;
}

Spectrum normalize_css(const Spectrum& css) {
  if (css.size() == 0) return css;
  const double peak = css.maxCoeff();
  if (!(peak > 0.0)) return css;
  return css / peak;
}

Spectrum moddnn_forward(const ModDnnModel& model, const Spectrum& eta0, const ProjectionMatrix& P,
                        ForwardMode mode, IterTrace* trace, bool identity_calibrator) {
  if (eta0.size() != P.size()) throw ShapeError("moddnn_forward: spectrum length does not match P");
  ScgConfig cfg = model.solver_config();
  StopRule rule = StopRule::UpdateNorm;
  if (mode == ForwardMode::Train) {
    cfg.n_cg_max = model.train_n_cg;
    rule = StopRule::FixedDepth;
  }
  if (trace) {
    *trace = IterTrace{};
    trace->fingerprint = model_fingerprint(model);
    trace->identity_calibrator = identity_calibrator;
    trace->etas.push_back(eta0);
  }
  Spectrum eta = eta0;
  for (int i = 0; i < model.unroll_I; ++i) {
    Spectrum z;
    ActivationCache cache;
    if (identity_calibrator) {
      z = eta;
    } else {
      z = net_forward(model.calibrator, eta, trace ? &cache : nullptr);
    }
    ScgTape tape;
    ScgResult res = scg_solve(P, eta, z, cfg, rule, trace ? &tape : nullptr);
    if (trace) {
      trace->zs.push_back(z);
      trace->caches.push_back(std::move(cache));
      trace->tapes.push_back(std::move(tape));
      trace->solver_traces.push_back(res.trace);
      trace->etas.push_back(res.eta);
    }
    eta = std::move(res.eta);
  }
  return eta;
}

LossValue mse_loss(const Spectrum& eta_out, const Spectrum& label) {
  if (eta_out.size() != label.size()) throw ShapeError("mse_loss: length mismatch");
  if (eta_out.size() == 0) throw ShapeError("mse_loss: empty spectra");
  const double L = static_cast<double>(eta_out.size());
  const Spectrum diff = eta_out - label;
  return LossValue{diff.squaredNorm() / L, (2.0 / L) * diff};
}

ModelGradient moddnn_backward(const ModDnnModel& model, const ProjectionMatrix& P, const IterTrace& trace,
                              const Spectrum& grad_loss) {
  const std::size_t I = trace.tapes.size();
  if (I != static_cast<std::size_t>(model.unroll_I) || trace.fingerprint != model_fingerprint(model)) {
    throw ContractError("moddnn_backward: trace was not produced by this model");
  }
  if (grad_loss.size() != P.size()) throw ShapeError("moddnn_backward: gradient length mismatch");

  ModelGradient out;
  out.d_calibrator = model.calibrator.zeros_like();
  double d_lambda = 0.0;
  Spectrum grad = grad_loss;
  for (std::size_t i = I; i-- > 0;) {
    const ScgGradient sg = scg_backward(P, trace.tapes[i], grad);
    d_lambda += sg.d_lambda;
    if (trace.identity_calibrator) {
      grad = sg.d_eta_prev + sg.d_z;
      continue;
    }
    const NetGradient ng = net_backward(model.calibrator, trace.caches[i], sg.d_z);
    for (std::size_t l = 0; l < out.d_calibrator.layers.size(); ++l) {
      out.d_calibrator.layers[l].kernel += ng.d_params.layers[l].kernel;
      out.d_calibrator.layers[l].bias += ng.d_params.layers[l].bias;
    }
    grad = sg.d_eta_prev + ng.d_input;
  }
  out.d_lambda_raw = d_lambda * sigmoid(model.lambda_raw);
  out.d_eta0 = std::move(grad);
  return out;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (threads < 1) throw ConfigError("train: threads must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("train: Adam betas must lie in [0, 1)");
  }
  if (!(eps_adam > 0.0)) throw ConfigError("train: eps_adam must be > 0");
  schedule.validate();
}

double mean_loss(const ModDnnModel& model, const ProjectionMatrix& P, const std::vector<TrainSample>& data,
                 ForwardMode mode, int threads) {
  if (data.empty()) throw ConfigError("mean_loss: empty dataset");
  std::vector<double> losses(data.size());
  parallel_for(data.size(), threads, [&](std::size_t i) {
    const Spectrum out = moddnn_forward(model, data[i].input, P, mode);
    losses[i] = mse_loss(out, data[i].label).value;
  });
  return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
}

TrainHistory train(ModDnnModel& model, const ProjectionMatrix& P, const std::vector<TrainSample>& data,
                   const TrainConfig& cfg, const std::vector<TrainSample>* val, const EpochCallback& on_epoch) {
  cfg.validate();
  model.validate();
  if (data.empty()) throw ConfigError("train: dataset is empty");
  for (const auto& s : data) {
    if (s.input.size() != P.size() || s.label.size() != P.size()) {
      throw ShapeError("train: sample length does not match the grid");
    }
  }

  std::vector<double> flat = model.calibrator.flatten();
  flat.push_back(model.lambda_raw);
  AdamState adam(flat.size(), cfg.beta1, cfg.beta2, cfg.eps_adam);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  TrainHistory hist;
  const std::size_t B = static_cast<std::size_t>(cfg.batch_size);
  std::vector<std::vector<double>> grads(B);
  std::vector<double> losses(B);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.schedule.rate(epoch);
    std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(epoch)}));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    std::vector<double> batch_losses;
    for (std::size_t start = 0; start < order.size(); start += B) {
      const std::size_t n = std::min(B, order.size() - start);
      parallel_for(n, cfg.threads, [&](std::size_t j) {
        losses[j] = sample_gradient(model, P, data[order[start + j]], grads[j]);
      });
      std::vector<double> total(flat.size(), 0.0);
      double loss = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        loss += losses[j];
        for (std::size_t k = 0; k < total.size(); ++k) total[k] += grads[j][k];
      }
      loss /= static_cast<double>(n);
      for (double& v : total) v /= static_cast<double>(n);
      const bool finite = std::isfinite(loss) &&
                          std::all_of(total.begin(), total.end(), [](double v) { return std::isfinite(v); });
      if (!finite) {
        if (!cfg.diagnostic_checkpoint.empty()) save_model(cfg.diagnostic_checkpoint, model);
        throw NumericalError("train: non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                             std::to_string(start / B + 1));
      }
      adam_step(flat, total, adam, lr);
      model.calibrator.assign(std::span<const double>(flat.data(), flat.size() - 1));
      model.lambda_raw = flat.back();
      batch_losses.push_back(loss);
    }
    hist.epoch_mean_loss.push_back(std::accumulate(batch_losses.begin(), batch_losses.end(), 0.0) /
                                   static_cast<double>(batch_losses.size()));
    hist.batch_losses.push_back(std::move(batch_losses));
    hist.learning_rate.push_back(lr);
    hist.lambda.push_back(model.lambda());
    if (val && !val->empty()) hist.val_loss.push_back(mean_loss(model, P, *val, ForwardMode::Train, cfg.threads));
    hist.epoch_loss_sd = loss_sd_history(hist);
    if (on_epoch) on_epoch(epoch, hist);
  }
  return hist;
}

AoaEstimate estimate_aoa(const Spectrum& spectrum, const AngleGrid& grid, bool interpolate) {
  const Eigen::Index L = spectrum.size();
  if (L != static_cast<Eigen::Index>(grid.size())) throw ShapeError("estimate_aoa: spectrum length mismatch");
  AoaEstimate est;
  Eigen::Index best = 0;
  for (Eigen::Index l = 1; l < L; ++l) {
    if (spectrum(l) > spectrum(best)) best = l;  // strict: ties keep the smaller angle
  }
  est.index = static_cast<std::size_t>(best);
  est.theta_deg = grid.angle(est.index);
  est.tie = spectrum.maxCoeff() == spectrum.minCoeff();
  if (!interpolate || est.tie || best == 0 || best == L - 1) return est;

  const double ym = spectrum(best - 1);
  const double y0 = spectrum(best);
  const double yp = spectrum(best + 1);
  const double curv = ym - 2.0 * y0 + yp;
  if (!(curv < 0.0)) return est;
  const double delta = std::clamp(0.5 * (ym - yp) / curv, -1.0, 1.0);
  est.theta_deg += delta * grid.step_deg();
  return est;
}

}  // namespace moddnn
