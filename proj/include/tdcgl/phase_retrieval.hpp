#pragma once

#include <memory>
#include <vector>

#include "tdcgl/field_grid.hpp"
#include "tdcgl/multigrid.hpp"
#include "tdcgl/nonlinear_fn.hpp"

namespace tdcgl {

struct PhaseRetrievalConfig {
  double eta_over_alpha = 0.0;
  /// eta*alpha; zero switches off the quadratic gradient term.
  double eta_alpha_product = 0.0;
  NonlinearFn g_over_alpha = NonlinearFn::zero();
  int max_iters = 400;
  double grad_norm_tol = 1e-6;
  /// Consecutive growths of the norm change that flag divergence.
  int divergence_window = 20;

  void validate() const;
};

enum class RetrievalStatus { converged, diverged, iteration_limit };

const char* to_string(RetrievalStatus s);

struct RetrievedPhase {
  /// Scaled phase 2*Phi/alpha with zero mean.
  ScalarField2D phi_tilde;
  int iterations_used = 0;
  std::vector<double> grad_norm_history;
  RetrievalStatus status = RetrievalStatus::iteration_limit;
  /// Constant removed from the last right-hand side to make it solvable.
  double compatibility_shift = 0.0;

  bool converged() const { return status == RetrievalStatus::converged; }
};

struct EllipticSolution {
  ScalarField2D u;
  int iterations = 0;
  double residual = 0.0;
  double compatibility_shift = 0.0;
};

/// (1/sqrt(I)) lap sqrt(I).
ScalarField2D amplitude_curvature(const ScalarField2D& I);

/// (1/I) div(I grad u) in the compact flux form.
ScalarField2D weighted_laplacian(const ScalarField2D& I, const ScalarField2D& u);

/// sqrt(sum |grad f|^2 h^2).
double gradient_l2_norm(const ScalarField2D& f);

/// -G - (eta*alpha/2)|grad phi_prev|^2 with
/// G = (1/I) dI/dz + 2 g/alpha - 2 (eta/alpha) (1/sqrt(I)) lap sqrt(I).
ScalarField2D continuity_rhs(const ScalarField2D& I, const ScalarField2D& dIdz, const PhaseRetrievalConfig& cfg,
                             const ScalarField2D& phi_prev);

/// Solver for lap u + (grad I / I) . grad u = rhs with zero normal derivative.
/// Holds the multigrid hierarchy for one intensity field.
class EllipticSolver {
 public:
  explicit EllipticSolver(const ScalarField2D& I);

  /// Projects rhs onto the solvable subspace, solves to max residual
  /// < 1e-8 max|rhs| (1e-12 absolute floor) and returns the zero-mean solution.
  /// Throws NonConvergence if the residual bound is not met.
  EllipticSolution solve(const ScalarField2D& rhs, const ScalarField2D* initial_guess = nullptr) const;

  const GridSpec& spec() const { return spec_; }

 private:
  GridSpec spec_;
  std::unique_ptr<NeumannMultigrid> mg_;
};

ScalarField2D solve_elliptic(const ScalarField2D& I, const ScalarField2D& rhs);

/// Fixed-point iteration on the continuity equation. warm_start seeds both the
/// quadratic term and the first norm comparison.
RetrievedPhase retrieve_phase(const ScalarField2D& I_mid, const ScalarField2D& dIdz, const PhaseRetrievalConfig& cfg,
                              const ScalarField2D* warm_start = nullptr);
RetrievedPhase retrieve_phase(const EllipticSolver& solver, const ScalarField2D& I_mid, const ScalarField2D& dIdz,
                              const PhaseRetrievalConfig& cfg, const ScalarField2D* warm_start = nullptr);

/// Relative RMS error of |grad phi|.
double rms_phase_gradient_error(const ScalarField2D& phi_exact, const ScalarField2D& phi_retrieved);
/// Relative RMS error of the phase after removing each field's mean.
double rms_phase_error(const ScalarField2D& phi_exact, const ScalarField2D& phi_retrieved);

}  // namespace tdcgl
