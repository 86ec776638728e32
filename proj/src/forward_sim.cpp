#include "tdcgl/forward_sim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "tdcgl/errors.hpp"

namespace tdcgl {

void ModelSpec::validate() const {
  if (alpha == 0.0 || !std::isfinite(alpha)) throw std::invalid_argument("alpha must be finite and nonzero");
  if (!std::isfinite(eta)) throw std::invalid_argument("eta must be finite");
}

InitialConditionSpec InitialConditionSpec::centered_blob(double A_phi) {
  InitialConditionSpec s;
  s.W = 0.125;
  s.r0 = 0.0;
  s.center_x = 0.5;
  s.center_y = 0.5;
  s.A_phi = A_phi;
  return s;
}

void InitialConditionSpec::validate() const {
  if (!(A > 0.0)) throw std::invalid_argument("initial condition: A must be positive");
  if (!(W > 0.0)) throw std::invalid_argument("initial condition: W must be positive");
  if (!(delta >= 0.0 && delta < 1.0)) throw std::invalid_argument("initial condition: delta must lie in [0, 1)");
  if (n < 0) throw std::invalid_argument("initial condition: n must be nonnegative");
}

void EvolutionPlan::validate() const {
  if (!(dz > 0.0)) throw std::invalid_argument("evolution plan: dz must be positive");
  if (n_steps < 0) throw std::invalid_argument("evolution plan: n_steps must be nonnegative");
  if (snapshot_every < 1) throw std::invalid_argument("evolution plan: snapshot_every must be positive");
  if (n_steps % snapshot_every != 0) throw std::invalid_argument("evolution plan: snapshot_every must divide n_steps");
}

void IntensityTriple::validate() const {
  require_same_grid(I0, I2, "intensity triple");
  require_same_grid(I0, I4, "intensity triple");
  I0.spec().validate();
  if (!(dz_plane > 0.0)) throw std::invalid_argument("intensity triple: dz_plane must be positive");
  for (const ScalarField2D* f : {&I0, &I2, &I4}) {
    if (!f->all_finite()) throw std::invalid_argument("intensity triple: nonfinite intensity");
    if (!(f->min() > 0.0)) throw std::invalid_argument("intensity triple: intensities must be strictly positive");
  }
}

namespace {
const ScalarField2D& lower_plane(const IntensityTriple& t, int which) {
  if (which == 1) return t.I0;
  if (which == 3) return t.I2;
  throw std::invalid_argument("midplane index must be 1 or 3");
}
const ScalarField2D& upper_plane(const IntensityTriple& t, int which) { return which == 1 ? t.I2 : t.I4; }
}  // namespace

ScalarField2D IntensityTriple::mid_intensity(int which) const {
  ScalarField2D out = lower_plane(*this, which);
  out += upper_plane(*this, which);
  out *= 0.5;
  return out;
}

ScalarField2D IntensityTriple::mid_dIdz(int which) const {
  return central_dz(lower_plane(*this, which), upper_plane(*this, which), 0.5 * dz_plane);
}

IntensityTriple EvolutionResult::triple() const {
  if (intensity.size() < 3) throw std::invalid_argument("evolution stored fewer than three planes");
  return IntensityTriple{intensity[0], intensity[1], intensity[2], dz_plane};
}

namespace {

double envelope(const InitialConditionSpec& s, double x, double y) {
  const double r = std::hypot(x - s.center_x, y - s.center_y);
  const double u = (r - s.r0) / s.W;
  return std::exp(-0.5 * u * u);
}

}  // namespace

ScalarField2D init_intensity(const InitialConditionSpec& spec, const GridSpec& grid) {
  spec.validate();
  grid.validate();
  ScalarField2D I(grid);
  const double k = 2.0 * std::numbers::pi * spec.n;
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      const double x = grid.x(ix);
      const double y = grid.y(iy);
      const double e = envelope(spec, x, y);
      const double mx = 1.0 + spec.delta * e * std::cos(k * (x - spec.x0));
      const double my = 1.0 + spec.delta * e * std::sin(k * (y - spec.y0));
      const double v = spec.A * mx * my * e;
      if (!(v > 0.0) || !std::isfinite(v))
        throw std::invalid_argument("initial intensity is not strictly positive at node (" + std::to_string(ix) + ", " +
                                    std::to_string(iy) + ")");
      I(ix, iy) = v;
    }
  }
  return I;
}

ScalarField2D init_phase(const InitialConditionSpec& spec, const GridSpec& grid) {
  spec.validate();
  grid.validate();
  ScalarField2D phi(grid);
  for (int iy = 0; iy < grid.ny; ++iy)
    for (int ix = 0; ix < grid.nx; ++ix) phi(ix, iy) = spec.A_phi * envelope(spec, grid.x(ix), grid.y(iy));
  return phi;
}

ComplexField2D initial_field(const InitialConditionSpec& spec, const GridSpec& grid) {
  return ComplexField2D::from_polar(init_intensity(spec, grid), init_phase(spec, grid));
}

ComplexField2D tdcgl_rhs(const ComplexField2D& psi, const ModelSpec& model) {
  const ScalarField2D lr = laplacian(psi.re);
  const ScalarField2D li = laplacian(psi.im);
  const double eta = model.eta;
  const double inv_alpha = 1.0 / model.alpha;
  ComplexField2D out(psi.spec());
  for (std::size_t k = 0; k < out.re.size(); ++k) {
    const double pr = psi.re[k];
    const double pi = psi.im[k];
    const double I = pr * pr + pi * pi;
    const double f = model.f(I);
    const double g = model.g(I);
    const double sr = lr[k] + eta * li[k] + f * pr - g * pi;
    const double si = li[k] - eta * lr[k] + f * pi + g * pr;
    out.re[k] = -si * inv_alpha;
    out.im[k] = sr * inv_alpha;
  }
  return out;
}

namespace {

/// a + s*b
ComplexField2D axpy(const ComplexField2D& a, double s, const ComplexField2D& b) {
  ComplexField2D out(a.spec());
  for (std::size_t k = 0; k < out.re.size(); ++k) {
    out.re[k] = a.re[k] + s * b.re[k];
    out.im[k] = a.im[k] + s * b.im[k];
  }
  return out;
}

double max_modulus(const ComplexField2D& psi) {
  double m2 = 0.0;
  for (std::size_t k = 0; k < psi.re.size(); ++k) m2 = std::max(m2, psi.re[k] * psi.re[k] + psi.im[k] * psi.im[k]);
  return std::sqrt(m2);
}

}  // namespace

ComplexField2D rk4_step(const ComplexField2D& psi, const ModelSpec& model, double dz, double blowup_limit) {
  if (!(dz > 0.0)) throw std::invalid_argument("rk4_step: dz must be positive");
  const ComplexField2D k1 = tdcgl_rhs(psi, model);
  const ComplexField2D k2 = tdcgl_rhs(axpy(psi, 0.5 * dz, k1), model);
  const ComplexField2D k3 = tdcgl_rhs(axpy(psi, 0.5 * dz, k2), model);
  const ComplexField2D k4 = tdcgl_rhs(axpy(psi, dz, k3), model);
  ComplexField2D out(psi.spec());
  const double w = dz / 6.0;
  for (std::size_t k = 0; k < out.re.size(); ++k) {
    out.re[k] = psi.re[k] + w * (k1.re[k] + 2.0 * k2.re[k] + 2.0 * k3.re[k] + k4.re[k]);
    out.im[k] = psi.im[k] + w * (k1.im[k] + 2.0 * k2.im[k] + 2.0 * k3.im[k] + k4.im[k]);
  }
  if (!out.all_finite()) throw NumericalBlowup("rk4_step produced nonfinite values");
  if (max_modulus(out) > blowup_limit) throw NumericalBlowup("rk4_step exceeded the blowup limit");
  return out;
}

EvolutionResult evolve(const ComplexField2D& psi0, const ModelSpec& model, const EvolutionPlan& plan) {
  model.validate();
  plan.validate();
  if (!psi0.all_finite()) throw std::invalid_argument("evolve: initial field has nonfinite values");
  const double limit = 1e6 * max_modulus(psi0);
  const ScalarField2D phase0 = psi0.phase();

  EvolutionResult result;
  result.dz_plane = plan.snapshot_every * plan.dz;
  ComplexField2D psi = psi0;
  for (int step = 1; step <= plan.n_steps; ++step) {
    try {
      psi = rk4_step(psi, model, plan.dz, limit > 0.0 ? limit : std::numeric_limits<double>::infinity());
    } catch (const NumericalBlowup& e) {
      throw NumericalBlowup(std::string(e.what()) + " at step " + std::to_string(step), step);
    }
    if (step % plan.snapshot_every == 0) {
      // Phase relative to the initial phase keeps the stored truth free of 2*pi jumps.
      ScalarField2D phase(psi.spec());
      for (std::size_t k = 0; k < phase.size(); ++k) {
        const double c = std::cos(phase0[k]);
        const double s = std::sin(phase0[k]);
        const double re = psi.re[k] * c + psi.im[k] * s;
        const double im = psi.im[k] * c - psi.re[k] * s;
        phase[k] = phase0[k] + std::atan2(im, re);
      }
      result.z.push_back(step * plan.dz);
      result.intensity.push_back(psi.intensity());
      result.phase.push_back(std::move(phase));
    }
  }
  return result;
}

}  // namespace tdcgl
