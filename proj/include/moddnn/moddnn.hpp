#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "moddnn/angle_grid.hpp"
#include "moddnn/calibrator.hpp"
#include "moddnn/coarray.hpp"
#include "moddnn/scg.hpp"

namespace moddnn {

// lambda = softplus(lambda_raw) + kLambdaFloor, strictly positive.
constexpr double kLambdaFloor = 1e-8;
double lambda_from_raw(double raw);
double raw_from_lambda(double lambda);

struct ModDnnModel {
  CalibratorParams calibrator;  // shared by every unroll
  double lambda_raw = 0.0;
  int unroll_I = 3;
  AngleGrid grid{-60.0, 60.0, 1.0};
  ScgConfig scg;       // lambda field is ignored; see lambda()
  int train_n_cg = 10; // fixed CG depth used while training

  double lambda() const { return lambda_from_raw(lambda_raw); }
  // Solver config with the model's current lambda filled in.
  ScgConfig solver_config() const;
  void validate() const;
};

struct ModelSpec {
  CalibratorShape shape;
  double output_init_scale = 0.1;
  std::uint64_t seed = 1;
  int unroll_I = 3;
  double lambda_init = 1.0;
  ScgConfig scg;
  int train_n_cg = 10;
};

ModDnnModel make_model(const AngleGrid& grid, const ModelSpec& spec);

enum class ForwardMode {
  Train,  // fixed depth train_n_cg, no early stop
  Eval,   // early stop on the update norm, up to scg.n_cg_max
};

struct IterTrace {
  std::vector<Spectrum> etas;  // eta^0 .. eta^I
  std::vector<Spectrum> zs;    // z^0 .. z^(I-1)
  std::vector<ActivationCache> caches;
  std::vector<ScgTape> tapes;
  std::vector<ScgTrace> solver_traces;
  std::uint64_t fingerprint = 0;
  bool identity_calibrator = false;
};

// Scale by 1 / max; an all-nonpositive input is returned unchanged.
Spectrum normalize_css(const Spectrum& css);

// Runs I alternations z = C(eta), eta <- scg(P, eta, z) from eta^0 = eta0.
// With identity_calibrator set, C is the identity (model-driven ablation).
Spectrum moddnn_forward(const ModDnnModel& model, const Spectrum& eta0, const ProjectionMatrix& P,
                        ForwardMode mode = ForwardMode::Eval, IterTrace* trace = nullptr,
                        bool identity_calibrator = false);

struct LossValue {
  double value = 0.0;
  Spectrum grad;  // d value / d eta_out
};

LossValue mse_loss(const Spectrum& eta_out, const Spectrum& label);

struct ModelGradient {
  CalibratorParams d_calibrator;
  double d_lambda_raw = 0.0;
  Spectrum d_eta0;
};

ModelGradient moddnn_backward(const ModDnnModel& model, const ProjectionMatrix& P, const IterTrace& trace,
                              const Spectrum& grad_loss);

struct TrainSample {
  Spectrum input;  // normalized CSS
  Spectrum label;
};

struct TrainConfig {
  int epochs = 30;
  int batch_size = 64;
  LrSchedule schedule;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_adam = 1e-8;
  std::uint64_t seed = 7;
  bool deterministic = true;
  int threads = 1;
  std::string diagnostic_checkpoint;  // written when the loss blows up

  void validate() const;
};

struct TrainHistory {
  std::vector<double> epoch_mean_loss;
  std::vector<double> epoch_loss_sd;  // versus the final-epoch mean
  std::vector<double> learning_rate;
  std::vector<double> val_loss;       // empty without a validation set
  std::vector<double> lambda;
  std::vector<std::vector<double>> batch_losses;
};

using EpochCallback = std::function<void(int epoch, const TrainHistory&)>;

// Mini-batch Adam on the entry-mean MSE. Per-sample gradients are reduced
// in sample order, so the result does not depend on the thread count.
TrainHistory train(ModDnnModel& model, const ProjectionMatrix& P, const std::vector<TrainSample>& data,
                   const TrainConfig& cfg, const std::vector<TrainSample>* val = nullptr,
                   const EpochCallback& on_epoch = {});

double mean_loss(const ModDnnModel& model, const ProjectionMatrix& P, const std::vector<TrainSample>& data,
                 ForwardMode mode = ForwardMode::Train, int threads = 1);

struct AoaEstimate {
  double theta_deg = 0.0;
  std::size_t index = 0;
  bool tie = false;  // flat spectrum, no peak to read
};

AoaEstimate estimate_aoa(const Spectrum& spectrum, const AngleGrid& grid, bool interpolate = false);

}  // namespace moddnn
