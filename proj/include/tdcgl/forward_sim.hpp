#pragma once

#include <limits>
#include <vector>

#include "tdcgl/field_grid.hpp"
#include "tdcgl/nonlinear_fn.hpp"

namespace tdcgl {

/// Coefficients of i*alpha*dPsi/dz + (1 - i*eta) lap Psi + (f(I) + i g(I)) Psi = 0.
struct ModelSpec {
  double alpha = 1.0;
  double eta = 2.0;
  NonlinearFn f = NonlinearFn::sine_scaled(100.0);
  NonlinearFn g = NonlinearFn::power(3.0, 2.0);

  void validate() const;
  bool operator==(const ModelSpec&) const = default;
};

/// Modulated Gaussian intensity and Gaussian phase. The envelope radius is
/// measured from (center_x, center_y).
struct InitialConditionSpec {
  double A = 10.0;
  double W = 8.0;
  double delta = 0.01;
  double r0 = 0.5;
  int n = 20;
  double x0 = 0.5;
  double y0 = 0.5;
  double A_phi = 0.0;
  double center_x = 0.0;
  double center_y = 0.0;

  /// Envelope centred in the domain with width 0.125 and no ring offset.
  static InitialConditionSpec centered_blob(double A_phi);
  void validate() const;
  bool operator==(const InitialConditionSpec&) const = default;
};

struct EvolutionPlan {
  double dz = 1e-7;
  int n_steps = 300;
  int snapshot_every = 100;

  void validate() const;
  bool operator==(const EvolutionPlan&) const = default;
};

/// Intensities on planes z0, z2, z4; dz_plane separates adjacent planes.
struct IntensityTriple {
  ScalarField2D I0;
  ScalarField2D I2;
  ScalarField2D I4;
  double dz_plane = 0.0;

  const GridSpec& spec() const { return I0.spec(); }
  /// Throws unless the planes share a grid, are strictly positive and dz_plane > 0.
  void validate() const;
  /// Intensity and its z-derivative at the midplane between planes a and b.
  ScalarField2D mid_intensity(int which) const;
  ScalarField2D mid_dIdz(int which) const;
};

/// Stored planes of a forward run; phases are ground truth for diagnostics only.
struct EvolutionResult {
  std::vector<double> z;
  std::vector<ScalarField2D> intensity;
  std::vector<ScalarField2D> phase;
  double dz_plane = 0.0;

  /// The first three stored planes. Throws if fewer than three exist.
  IntensityTriple triple() const;
};

ScalarField2D init_intensity(const InitialConditionSpec& spec, const GridSpec& grid);
ScalarField2D init_phase(const InitialConditionSpec& spec, const GridSpec& grid);
ComplexField2D initial_field(const InitialConditionSpec& spec, const GridSpec& grid);

/// dPsi/dz for the model.
ComplexField2D tdcgl_rhs(const ComplexField2D& psi, const ModelSpec& model);

/// Classical RK4 step. Throws NumericalBlowup on nonfinite values or when
/// max|Psi| exceeds blowup_limit.
ComplexField2D rk4_step(const ComplexField2D& psi, const ModelSpec& model, double dz,
                        double blowup_limit = std::numeric_limits<double>::infinity());

/// Runs plan.n_steps steps and stores every snapshot_every-th plane. The
/// blowup guard is 1e6 times the initial max|Psi|.
EvolutionResult evolve(const ComplexField2D& psi0, const ModelSpec& model, const EvolutionPlan& plan);

}  // namespace tdcgl
