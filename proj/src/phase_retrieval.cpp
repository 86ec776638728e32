#include "tdcgl/phase_retrieval.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "tdcgl/errors.hpp"

namespace tdcgl {

void PhaseRetrievalConfig::validate() const {
  if (max_iters < 1) throw std::invalid_argument("phase retrieval: max_iters must be at least 1");
  if (!(grad_norm_tol > 0.0)) throw std::invalid_argument("phase retrieval: grad_norm_tol must be positive");
  if (divergence_window < 1) throw std::invalid_argument("phase retrieval: divergence_window must be positive");
}

const char* to_string(RetrievalStatus s) {
  switch (s) {
    case RetrievalStatus::converged:
      return "converged";
    case RetrievalStatus::diverged:
      return "diverged";
    case RetrievalStatus::iteration_limit:
      return "iteration_limit";
  }
  return "unknown";
}

namespace {

void require_positive(const ScalarField2D& I, const char* what) {
  if (!I.all_finite() || !(I.min() > 0.0)) throw std::invalid_argument(std::string(what) + ": intensity must be strictly positive");
}

}  // namespace

ScalarField2D amplitude_curvature(const ScalarField2D& I) {
  require_positive(I, "amplitude_curvature");
  ScalarField2D a(I.spec());
  for (std::size_t k = 0; k < a.size(); ++k) a[k] = std::sqrt(I[k]);
  ScalarField2D out = laplacian(a);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] /= a[k];
  return out;
}

ScalarField2D weighted_laplacian(const ScalarField2D& I, const ScalarField2D& u) {
  ScalarField2D out = flux_divergence(I, u);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] /= I[k];
  return out;
}

double gradient_l2_norm(const ScalarField2D& f) { return std::sqrt(gradient_norm_squared(f).integral()); }

ScalarField2D continuity_rhs(const ScalarField2D& I, const ScalarField2D& dIdz, const PhaseRetrievalConfig& cfg,
                             const ScalarField2D& phi_prev) {
  require_positive(I, "continuity_rhs");
  require_same_grid(I, dIdz, "continuity_rhs");
  require_same_grid(I, phi_prev, "continuity_rhs");
  const ScalarField2D D = amplitude_curvature(I);
  ScalarField2D out(I.spec());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double G = dIdz[k] / I[k] + 2.0 * cfg.g_over_alpha(I[k]) - 2.0 * cfg.eta_over_alpha * D[k];
    out[k] = -G;
  }
  if (cfg.eta_alpha_product != 0.0) {
    const ScalarField2D q = gradient_norm_squared(phi_prev);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] -= 0.5 * cfg.eta_alpha_product * q[k];
  }
  return out;
}

EllipticSolver::EllipticSolver(const ScalarField2D& I) : spec_(I.spec()) {
  require_positive(I, "solve_elliptic");
  mg_ = std::make_unique<NeumannMultigrid>(I);
}

EllipticSolution EllipticSolver::solve(const ScalarField2D& rhs, const ScalarField2D* initial_guess) const {
  if (!(rhs.spec() == spec_)) throw std::invalid_argument("solve_elliptic: rhs lives on another grid");
  if (!rhs.all_finite()) throw std::invalid_argument("solve_elliptic: rhs has nonfinite values");
  const std::vector<double>& m = mg_->mass();
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) {
    num += m[k] * rhs[k];
    den += m[k];
  }
  EllipticSolution sol;
  sol.compatibility_shift = num / den;
  ScalarField2D projected = rhs;
  projected += -sol.compatibility_shift;

  const double tol = std::max(1e-8 * rhs.max_abs(), 1e-12);
  sol.u = initial_guess ? *initial_guess : ScalarField2D(spec_);
  require_same_grid(sol.u, rhs, "solve_elliptic");
  const NeumannMultigrid::Stats st = mg_->solve(projected, sol.u, tol);
  sol.iterations = st.iterations;
  sol.residual = st.scaled_residual;
  if (!st.converged)
    throw NonConvergence("elliptic solve stopped at residual " + std::to_string(st.scaled_residual) + " after " +
                         std::to_string(st.iterations) + " iterations");
  sol.u += -sol.u.mean();
  return sol;
}

ScalarField2D solve_elliptic(const ScalarField2D& I, const ScalarField2D& rhs) {
  require_same_grid(I, rhs, "solve_elliptic");
  return EllipticSolver(I).solve(rhs).u;
}

RetrievedPhase retrieve_phase(const ScalarField2D& I_mid, const ScalarField2D& dIdz, const PhaseRetrievalConfig& cfg,
                              const ScalarField2D* warm_start) {
  const EllipticSolver solver(I_mid);
  return retrieve_phase(solver, I_mid, dIdz, cfg, warm_start);
}

RetrievedPhase retrieve_phase(const EllipticSolver& solver, const ScalarField2D& I_mid, const ScalarField2D& dIdz,
                              const PhaseRetrievalConfig& cfg, const ScalarField2D* warm_start) {
  cfg.validate();
  require_positive(I_mid, "retrieve_phase");
  require_same_grid(I_mid, dIdz, "retrieve_phase");

  RetrievedPhase out;
  out.phi_tilde = warm_start ? *warm_start : ScalarField2D(I_mid.spec());
  require_same_grid(out.phi_tilde, I_mid, "retrieve_phase");
  out.phi_tilde += -out.phi_tilde.mean();

  double prev_norm = gradient_l2_norm(out.phi_tilde);
  double prev_change = -1.0;
  int growth_run = 0;
  for (int k = 1; k <= cfg.max_iters; ++k) {
    const ScalarField2D rhs = continuity_rhs(I_mid, dIdz, cfg, out.phi_tilde);
    EllipticSolution sol = solver.solve(rhs, &out.phi_tilde);
    out.phi_tilde = std::move(sol.u);
    out.compatibility_shift = sol.compatibility_shift;
    out.iterations_used = k;

    const double norm = gradient_l2_norm(out.phi_tilde);
    out.grad_norm_history.push_back(norm);
    if (!std::isfinite(norm)) {
      out.status = RetrievalStatus::diverged;
      return out;
    }
    const double change = std::abs(norm - prev_norm);
    if (change < cfg.grad_norm_tol) {
      out.status = RetrievalStatus::converged;
      return out;
    }
    growth_run = (prev_change >= 0.0 && change > prev_change) ? growth_run + 1 : 0;
    if (growth_run >= cfg.divergence_window) {
      out.status = RetrievalStatus::diverged;
      return out;
    }
    prev_change = change;
    prev_norm = norm;
  }
  out.status = RetrievalStatus::iteration_limit;
  return out;
}

double rms_phase_gradient_error(const ScalarField2D& phi_exact, const ScalarField2D& phi_retrieved) {
  require_same_grid(phi_exact, phi_retrieved, "rms_phase_gradient_error");
  const ScalarField2D a = gradient_norm_squared(phi_exact);
  const ScalarField2D b = gradient_norm_squared(phi_retrieved);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = std::sqrt(a[k]) - std::sqrt(b[k]);
    num += d * d;
    den += a[k];
  }
  if (!(den > 0.0)) throw std::invalid_argument("rms_phase_gradient_error: exact phase has zero gradient");
  return std::sqrt(num / den);
}

double rms_phase_error(const ScalarField2D& phi_exact, const ScalarField2D& phi_retrieved) {
  require_same_grid(phi_exact, phi_retrieved, "rms_phase_error");
  const double ma = phi_exact.mean();
  const double mb = phi_retrieved.mean();
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < phi_exact.size(); ++k) {
    const double a = phi_exact[k] - ma;
    const double d = a - (phi_retrieved[k] - mb);
    num += d * d;
    den += a * a;
  }
  if (!(den > 0.0)) throw std::invalid_argument("rms_phase_error: exact phase is constant");
  return std::sqrt(num / den);
}

}  // namespace tdcgl
