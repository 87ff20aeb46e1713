#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "moddnn/angle_grid.hpp"
#include "moddnn/coarray.hpp"
#include "moddnn/error.hpp"

namespace moddnn {

struct ScgConfig {
  double lambda = 1.0;   // calibration / reconstruction trade-off
  double mu = 1e-4;      // zero-attractor weight, on max-normalized spectra
  double epsilon = 0.01;
  int n_cg_max = 20;
  double tol_gamma_cg = 1e-6;

  void validate() const;
};

struct ScgTrace {
  std::vector<double> update_norms;     // ||eta(n+1) - eta(n)||_2
  std::vector<double> residual_norms;   // ||(P + lambda I) eta(n+1) - b||_2
  std::vector<double> objective_values; // 0.5 eta'(P + lambda I)eta - b'eta + mu s(eta)
  int iterations = 0;
  bool converged = false;
};

class CurvatureBreakdown : public NumericalError {
 public:
  CurvatureBreakdown(const std::string& what, ScgTrace trace)
      : NumericalError(what), trace_(std::move(trace)) {}
  const ScgTrace& trace() const { return trace_; }

 private:
  ScgTrace trace_;
};

// s(eta) = log(1 + ||eta||_1 / epsilon)
double sparsity_value(const Spectrum& eta, double epsilon);
// mu * sgn(eta) / (1 + epsilon * ||eta||_1), with sgn(0) = 0
Spectrum sparsity_subgradient(const Spectrum& eta, double epsilon, double mu);

enum class StopRule {
  UpdateNorm,  // break once ||eta(n+1) - eta(n)|| < tol_gamma_cg
  FixedDepth,  // always run n_cg_max steps (fixed unrolled graph)
};

// Recorded forward state of one solve, consumed by scg_backward.
struct ScgTape {
  double lambda = 0.0;
  Spectrum z;
  std::vector<Spectrum> eta;  // eta(0..N)
  std::vector<Spectrum> g;    // g(0..N)
  std::vector<Spectrum> c;    // c(0..N-1)
  std::vector<Spectrum> q;    // (P + lambda I) c(n)
  std::vector<double> kappa;  // c(n)'(P + lambda I)c(n)
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<char> exhausted;  // residual vanished; alpha = beta = 0 held constant

  int steps() const { return static_cast<int>(alpha.size()); }
};

struct ScgResult {
  Spectrum eta;
  ScgTrace trace;
};

// Conjugate-gradient iteration on (P + lambda I) eta = eta_prev + lambda z
// with the zero-attracting correction -mu * grad_s(eta(n)) added to each
// update. Curvature uses c'(P + lambda I)c and the gradient is refreshed
// at eta(n+1).
ScgResult scg_solve(const ProjectionMatrix& P, const Spectrum& eta_prev, const Spectrum& z,
                    const ScgConfig& cfg, StopRule rule = StopRule::UpdateNorm,
                    ScgTape* tape = nullptr);

struct ScgGradient {
  Spectrum d_eta_prev;
  Spectrum d_z;
  double d_lambda = 0.0;
};

// Reverse-mode derivative of the solve output through the recorded CG
// recurrences. The sparsity correction is treated as a constant.
ScgGradient scg_backward(const ProjectionMatrix& P, const ScgTape& tape, const Spectrum& grad_eta);

using LinearOperator = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct CgResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double relative_residual = 0.0;
};

// Plain CG for symmetric positive (semi)definite operators. Stops once
// ||A x - b|| / ||b|| < tol or after n_max iterations.
CgResult cg_solve(const LinearOperator& A, const Eigen::VectorXd& b, int n_max, double tol);

}  // namespace moddnn
