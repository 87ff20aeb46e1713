#include "moddnn/scg.hpp"

#include <cmath>
#include <string>

namespace moddnn {

namespace {

// Squared residual below this fraction of ||b||^2 counts as exhausted.
constexpr double kExhaustedRatio = 1e-30;

void check_lengths(const ProjectionMatrix& P, const Spectrum& a, const Spectrum& b) {
  if (a.size() != P.size() || b.size() != P.size()) {
    throw ShapeError("scg: spectrum length does not match the projection matrix");
  }
}

}  // namespace

void ScgConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("scg: lambda must be finite and >= 0");
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw ConfigError("scg: mu must be finite and >= 0");
  if (!(epsilon > 0.0)) throw ConfigError("scg: epsilon must be > 0");
  if (n_cg_max < 1) throw ConfigError("scg: n_cg_max must be >= 1");
  if (!(tol_gamma_cg > 0.0)) throw ConfigError("scg: tol_gamma_cg must be > 0");
}

double sparsity_value(const Spectrum& eta, double epsilon) {
  if (!(epsilon > 0.0)) throw DomainError("sparsity_value: epsilon must be > 0");
  return std::log1p(eta.lpNorm<1>() / epsilon);
}

Spectrum sparsity_subgradient(const Spectrum& eta, double epsilon, double mu) {
  if (!(epsilon > 0.0)) throw DomainError("sparsity_subgradient: epsilon must be > 0");
  const double scale = mu / (1.0 + epsilon * eta.lpNorm<1>());
  Spectrum out(eta.size());
  for (Eigen::Index l = 0; l < eta.size(); ++l) {
    const double v = eta(l);
    out(l) = v > 0.0 ? scale : (v < 0.0 ? -scale : 0.0);
  }
  return out;
}

ScgResult scg_solve(const ProjectionMatrix& P, const Spectrum& eta_prev, const Spectrum& z,
                    const ScgConfig& cfg, StopRule rule, ScgTape* tape) {
  cfg.validate();
  check_lengths(P, eta_prev, z);
  const Eigen::MatrixXd& Pm = P.matrix();
  const double lam = cfg.lambda;
  const Eigen::Index L = P.size();

  const Spectrum b = eta_prev + lam * z;
  const double bb = b.squaredNorm();
  auto apply_a = [&](const Spectrum& v) -> Spectrum {
    Spectrum out = Pm * v;
    out += lam * v;
    return out;
  };

  Spectrum eta = Spectrum::Zero(L);
  Spectrum g = -b;
  Spectrum c = b;
  double gg = g.squaredNorm();

  if (tape) {
    *tape = ScgTape{};
    tape->lambda = lam;
    tape->z = z;
    tape->eta.push_back(eta);
    tape->g.push_back(g);
  }

  ScgTrace trace;
  for (int n = 0; n < cfg.n_cg_max; ++n) {
    const bool exhausted = gg <= kExhaustedRatio * bb;
    double alpha = 0.0;
    double kappa = 0.0;
    Spectrum q;
    if (!exhausted) {
      q = apply_a(c);
      kappa = c.dot(q);
      if (!(kappa > 0.0)) {
        throw CurvatureBreakdown("scg: non-positive curvature c'(P + lambda I)c = " + std::to_string(kappa) +
                                     " at iteration " + std::to_string(n),
                                 trace);
      }
      alpha = -g.dot(c) / kappa;
    }

    Spectrum eta_next = eta + alpha * c;
    if (cfg.mu > 0.0) eta_next -= sparsity_subgradient(eta, cfg.epsilon, cfg.mu);
    Spectrum g_next = apply_a(eta_next) - b;
    const double gg_next = g_next.squaredNorm();
    const double beta = exhausted ? 0.0 : (g_next - g).dot(g_next) / gg;
    Spectrum c_next = -g_next + beta * c;

    const double update = (eta_next - eta).norm();
    trace.update_norms.push_back(update);
    trace.residual_norms.push_back(std::sqrt(gg_next));
    // eta' A eta = eta'(g + b)
    double objective = 0.5 * eta_next.dot(g_next + b) - b.dot(eta_next);
    if (cfg.mu > 0.0) objective += cfg.mu * sparsity_value(eta_next, cfg.epsilon);
    trace.objective_values.push_back(objective);
    trace.iterations = n + 1;

    if (tape) {
      tape->c.push_back(c);
      tape->q.push_back(exhausted ? Spectrum::Zero(L) : q);
      tape->kappa.push_back(kappa);
      tape->alpha.push_back(alpha);
      tape->beta.push_back(beta);
      tape->exhausted.push_back(exhausted ? 1 : 0);
      tape->eta.push_back(eta_next);
      tape->g.push_back(g_next);
    }

    eta = std::move(eta_next);
    g = std::move(g_next);
    c = std::move(c_next);
    gg = gg_next;

    if (!eta.allFinite()) throw NumericalError("scg: non-finite iterate at iteration " + std::to_string(n));
    if (update < cfg.tol_gamma_cg) {
      trace.converged = true;
      if (rule == StopRule::UpdateNorm) break;
    } else {
      trace.converged = false;
    }
  }
  return ScgResult{std::move(eta), std::move(trace)};
}

ScgGradient scg_backward(const ProjectionMatrix& P, const ScgTape& tape, const Spectrum& grad_eta) {
  const int N = tape.steps();
  if (static_cast<int>(tape.eta.size()) != N + 1 || static_cast<int>(tape.g.size()) != N + 1) {
    throw ContractError("scg_backward: malformed tape");
  }
  if (grad_eta.size() != P.size() || tape.z.size() != P.size()) {
    throw ShapeError("scg_backward: gradient length mismatch");
  }
  const Eigen::MatrixXd& Pm = P.matrix();
  const double lam = tape.lambda;
  const Eigen::Index L = P.size();

  Spectrum eta_bar = grad_eta;             // adjoint of eta(n+1)
  Spectrum g_bar = Spectrum::Zero(L);      // adjoint of g(n+1)
  Spectrum c_bar = Spectrum::Zero(L);      // adjoint of c(n+1)
  Spectrum b_bar = Spectrum::Zero(L);
  double lam_bar = 0.0;

  for (int n = N - 1; n >= 0; --n) {
    const Spectrum& g_n = tape.g[n];
    const Spectrum& g_np1 = tape.g[n + 1];
    const Spectrum& c_n = tape.c[n];
    const Spectrum& eta_np1 = tape.eta[n + 1];
    const double alpha = tape.alpha[n];
    const double beta = tape.beta[n];
    const bool exhausted = tape.exhausted[n] != 0;

    Spectrum g_bar_n = Spectrum::Zero(L);
    Spectrum c_bar_n = Spectrum::Zero(L);

    // c(n+1) = -g(n+1) + beta c(n)
    g_bar -= c_bar;
    if (!exhausted) {
      const double beta_bar = c_bar.dot(c_n);
      c_bar_n += beta * c_bar;
      // beta = (g(n+1) - g(n))'g(n+1) / g(n)'g(n)
      const double D = g_n.squaredNorm();
      g_bar += (beta_bar / D) * (2.0 * g_np1 - g_n);
      g_bar_n += (beta_bar / D) * (-g_np1 - 2.0 * beta * g_n);
    }

    // g(n+1) = (P + lambda I) eta(n+1) - b
    eta_bar.noalias() += Pm * g_bar;
    eta_bar += lam * g_bar;
    b_bar -= g_bar;
    lam_bar += g_bar.dot(eta_np1);

    // eta(n+1) = eta(n) + alpha c(n) - const
    const double alpha_bar = eta_bar.dot(c_n);
    c_bar_n += alpha * eta_bar;

    if (!exhausted) {
      const double kappa = tape.kappa[n];
      // alpha = -g(n)'c(n) / kappa
      g_bar_n -= (alpha_bar / kappa) * c_n;
      c_bar_n -= (alpha_bar / kappa) * g_n;
      const double kappa_bar = -alpha_bar * alpha / kappa;
      // kappa = c(n)'(P + lambda I)c(n)
      c_bar_n += 2.0 * kappa_bar * tape.q[n];
      lam_bar += kappa_bar * c_n.squaredNorm();
    }

    // eta_bar carries over unchanged to eta(n).
    g_bar = std::move(g_bar_n);
    c_bar = std::move(c_bar_n);
  }

  // c(0) = -g(0), g(0) = (P + lambda I) * 0 - b
  g_bar -= c_bar;
  b_bar -= g_bar;

  ScgGradient out;
  out.d_eta_prev = b_bar;
  out.d_z = lam * b_bar;
  out.d_lambda = lam_bar + tape.z.dot(b_bar);
  return out;
}

CgResult cg_solve(const LinearOperator& A, const Eigen::VectorXd& b, int n_max, double tol) {
  if (n_max < 1) throw ConfigError("cg_solve: n_max must be >= 1");
  CgResult out;
  out.x = Eigen::VectorXd::Zero(b.size());
  const double b_norm = b.norm();
  if (b_norm == 0.0) return out;

  Eigen::VectorXd r = b;
  Eigen::VectorXd p = r;
  double rr = r.squaredNorm();
  ScgTrace trace;
  for (int it = 0; it < n_max; ++it) {
    const Eigen::VectorXd Ap = A(p);
    if (Ap.size() != b.size()) throw ShapeError("cg_solve: operator output length mismatch");
    const double curv = p.dot(Ap);
    if (!(curv > 0.0)) {
      throw CurvatureBreakdown("cg_solve: non-positive curvature at iteration " + std::to_string(it), trace);
    }
    const double alpha = rr / curv;
    out.x += alpha * p;
    r -= alpha * Ap;
    const double rr_next = r.squaredNorm();
    out.iterations = it + 1;
    out.relative_residual = std::sqrt(rr_next) / b_norm;
    trace.residual_norms.push_back(std::sqrt(rr_next));
    trace.iterations = it + 1;
    if (out.relative_residual < tol) break;
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  // Recurrence residual drifts; report the true one.
  out.relative_residual = (A(out.x) - b).norm() / b_norm;
  return out;
}

}  // namespace moddnn
