#include "tdcgl/field_grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace tdcgl {

GridSpec GridSpec::square(int n) {
  if (n < 5) throw std::invalid_argument("grid needs at least 5 points per side, got " + std::to_string(n));
  GridSpec g;
  g.nx = n;
  g.ny = n;
  g.h = 1.0 / (n - 1);
  return g;
}

void GridSpec::validate() const {
  if (nx != ny) throw std::invalid_argument("grid must be square");
  if (nx < 5) throw std::invalid_argument("grid needs at least 5 points per side");
  if (!(h > 0.0) || std::abs(h * (nx - 1) - 1.0) > 1e-12)
    throw std::invalid_argument("grid spacing must equal 1/(n-1)");
}

ScalarField2D::ScalarField2D(const GridSpec& spec, double fill) : spec_(spec), values_(spec.size(), fill) {}

ScalarField2D::ScalarField2D(const GridSpec& spec, std::vector<double> values)
    : spec_(spec), values_(std::move(values)) {
  if (values_.size() != spec_.size()) throw std::invalid_argument("field size does not match grid");
}

bool ScalarField2D::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double ScalarField2D::min() const { return *std::min_element(values_.begin(), values_.end()); }
double ScalarField2D::max() const { return *std::max_element(values_.begin(), values_.end()); }

double ScalarField2D::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double ScalarField2D::mean() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s / static_cast<double>(values_.size());
}

double ScalarField2D::integral() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s * spec_.h * spec_.h;
}

ScalarField2D& ScalarField2D::operator+=(const ScalarField2D& o) {
  require_same_grid(*this, o, "operator+=");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
  return *this;
}

ScalarField2D& ScalarField2D::operator-=(const ScalarField2D& o) {
  require_same_grid(*this, o, "operator-=");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
  return *this;
}

ScalarField2D& ScalarField2D::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

ScalarField2D& ScalarField2D::operator+=(double s) {
  for (double& v : values_) v += s;
  return *this;
}

ScalarField2D operator+(ScalarField2D a, const ScalarField2D& b) { return a += b; }
ScalarField2D operator-(ScalarField2D a, const ScalarField2D& b) { return a -= b; }
ScalarField2D operator*(double s, ScalarField2D a) { return a *= s; }

void require_same_grid(const ScalarField2D& a, const ScalarField2D& b, const char* what) {
  if (!(a.spec() == b.spec()) || a.size() != b.size())
    throw std::invalid_argument(std::string(what) + ": fields live on different grids");
}

ComplexField2D::ComplexField2D(ScalarField2D r, ScalarField2D i) : re(std::move(r)), im(std::move(i)) {
  require_same_grid(re, im, "ComplexField2D");
}

ComplexField2D ComplexField2D::from_polar(const ScalarField2D& intensity, const ScalarField2D& phase) {
  require_same_grid(intensity, phase, "from_polar");
  ComplexField2D psi(intensity.spec());
  for (std::size_t k = 0; k < intensity.size(); ++k) {
    const double a = std::sqrt(intensity[k]);
    psi.re[k] = a * std::cos(phase[k]);
    psi.im[k] = a * std::sin(phase[k]);
  }
  return psi;
}

ScalarField2D ComplexField2D::intensity() const {
  ScalarField2D out(spec());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = re[k] * re[k] + im[k] * im[k];
  return out;
}

ScalarField2D ComplexField2D::phase() const {
  ScalarField2D out(spec());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::atan2(im[k], re[k]);
  return out;
}

bool ComplexField2D::all_finite() const { return re.all_finite() && im.all_finite(); }

namespace {

void require_stencil_width(const GridSpec& g) {
  if (g.nx < 5 || g.ny < 5) throw std::invalid_argument("grid too small for finite-difference stencils");
}

/// Second derivative along a line of n samples spaced by stride, at position i.
inline double d2(const double* f, int i, int n, std::ptrdiff_t s) {
  if (i == 0) return 2.0 * f[0] - 5.0 * f[s] + 4.0 * f[2 * s] - f[3 * s];
  if (i == n - 1) return 2.0 * f[0] - 5.0 * f[-s] + 4.0 * f[-2 * s] - f[-3 * s];
  return f[-s] - 2.0 * f[0] + f[s];
}

/// First derivative times 2 along a line.
inline double d1(const double* f, int i, int n, std::ptrdiff_t s) {
  // Differences against f[0] keep constants exactly zero.
  if (i == 0) return 4.0 * (f[s] - f[0]) - (f[2 * s] - f[0]);
  if (i == n - 1) return (f[-2 * s] - f[0]) - 4.0 * (f[-s] - f[0]);
  return f[s] - f[-s];
}

}  // namespace

ScalarField2D laplacian(const ScalarField2D& f) {
  const GridSpec& g = f.spec();
  require_stencil_width(g);
  const int n = g.nx;
  const std::ptrdiff_t sy = n;
  const double inv_h2 = 1.0 / (g.h * g.h);
  ScalarField2D out(g);
  const double* src = f.data();
  double* dst = out.data();
  for (int iy = 0; iy < n; ++iy) {
    const bool edge_row = (iy == 0 || iy == n - 1);
    for (int ix = 0; ix < n; ++ix) {
      const std::size_t k = g.index(ix, iy);
      const double* p = src + k;
      if (!edge_row && ix > 0 && ix < n - 1) {
        dst[k] = (p[-1] + p[1] + p[-sy] + p[sy] - 4.0 * p[0]) * inv_h2;
      } else {
        dst[k] = (d2(p, ix, n, 1) + d2(p, iy, n, sy)) * inv_h2;
      }
    }
  }
  return out;
}

Gradient gradient(const ScalarField2D& f) {
  const GridSpec& g = f.spec();
  require_stencil_width(g);
  const int n = g.nx;
  const double inv_2h = 0.5 / g.h;
  Gradient out{ScalarField2D(g), ScalarField2D(g)};
  const double* src = f.data();
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const std::size_t k = g.index(ix, iy);
      out.x[k] = d1(src + k, ix, n, 1) * inv_2h;
      out.y[k] = d1(src + k, iy, n, n) * inv_2h;
    }
  }
  return out;
}

ScalarField2D divergence(const ScalarField2D& vx, const ScalarField2D& vy) {
  require_same_grid(vx, vy, "divergence");
  const GridSpec& g = vx.spec();
  require_stencil_width(g);
  const int n = g.nx;
  const double inv_2h = 0.5 / g.h;
  ScalarField2D out(g);
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const std::size_t k = g.index(ix, iy);
      out[k] = (d1(vx.data() + k, ix, n, 1) + d1(vy.data() + k, iy, n, n)) * inv_2h;
    }
  }
  return out;
}

ScalarField2D flux_divergence(const ScalarField2D& c, const ScalarField2D& u) {
  require_same_grid(c, u, "flux_divergence");
  const GridSpec& g = c.spec();
  require_stencil_width(g);
  const int n = g.nx;
  const std::ptrdiff_t sy = n;
  const double inv_h2 = 1.0 / (g.h * g.h);
  const double inv_4h2 = 0.25 * inv_h2;
  ScalarField2D out(g);
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const std::size_t k = g.index(ix, iy);
      const double* cp = c.data() + k;
      const double* up = u.data() + k;
      if (ix > 0 && ix < n - 1 && iy > 0 && iy < n - 1) {
        const double e = 0.5 * (cp[0] + cp[1]) * (up[1] - up[0]);
        const double w = 0.5 * (cp[0] + cp[-1]) * (up[0] - up[-1]);
        const double nn = 0.5 * (cp[0] + cp[sy]) * (up[sy] - up[0]);
        const double s = 0.5 * (cp[0] + cp[-sy]) * (up[0] - up[-sy]);
        out[k] = (e - w + nn - s) * inv_h2;
      } else {
        const double lap = (d2(up, ix, n, 1) + d2(up, iy, n, sy)) * inv_h2;
        const double cross = (d1(cp, ix, n, 1) * d1(up, ix, n, 1) + d1(cp, iy, n, sy) * d1(up, iy, n, sy)) * inv_4h2;
        out[k] = cp[0] * lap + cross;
      }
    }
  }
  return out;
}

ScalarField2D gradient_norm_squared(const ScalarField2D& f) {
  const Gradient gr = gradient(f);
  ScalarField2D out(f.spec());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = gr.x[k] * gr.x[k] + gr.y[k] * gr.y[k];
  return out;
}

double bilinear(const ScalarField2D& f, double x, double y) {
  const GridSpec& g = f.spec();
  constexpr double slack = 1e-12;
  if (x < -slack || x > 1.0 + slack || y < -slack || y > 1.0 + slack)
    throw std::out_of_range("bilinear sample outside the grid");
  const double sx = std::clamp(x / g.h, 0.0, static_cast<double>(g.nx - 1));
  const double sy = std::clamp(y / g.h, 0.0, static_cast<double>(g.ny - 1));
  const int ix = std::min(static_cast<int>(sx), g.nx - 2);
  const int iy = std::min(static_cast<int>(sy), g.ny - 2);
  const double tx = sx - ix;
  const double ty = sy - iy;
  const double f00 = f(ix, iy);
  const double f10 = f(ix + 1, iy);
  const double f01 = f(ix, iy + 1);
  const double f11 = f(ix + 1, iy + 1);
  return (1.0 - ty) * ((1.0 - tx) * f00 + tx * f10) + ty * ((1.0 - tx) * f01 + tx * f11);
}

BoundaryContour BoundaryContour::inscribed_circle(const GridSpec& spec, int samples) {
  spec.validate();
  if (samples <= 0) samples = 4 * (spec.nx - 1);
  BoundaryContour c;
  c.spec = spec;
  const double r = 0.5;
  const double step = 2.0 * std::numbers::pi / samples;
  for (int k = 0; k < samples; ++k) {
    const double t = step * k;
    const double ct = std::cos(t);
    const double st = std::sin(t);
    c.px.push_back(0.5 + r * ct);
    c.py.push_back(0.5 + r * st);
    c.nx.push_back(ct);
    c.ny.push_back(st);
    c.dl.push_back(r * step);
  }
  return c;
}

double boundary_flux(const Gradient& grad, const BoundaryContour& contour) {
  if (!(grad.x.spec() == contour.spec)) throw std::invalid_argument("boundary_flux: contour built for another grid");
  double total = 0.0;
  for (std::size_t k = 0; k < contour.size(); ++k) {
    const double gx = bilinear(grad.x, contour.px[k], contour.py[k]);
    const double gy = bilinear(grad.y, contour.px[k], contour.py[k]);
    total += (gx * contour.nx[k] + gy * contour.ny[k]) * contour.dl[k];
  }
  return total;
}

double boundary_flux(const ScalarField2D& phase, const BoundaryContour& contour) {
  if (!phase.all_finite()) throw std::invalid_argument("boundary_flux: phase has nonfinite values");
  return boundary_flux(gradient(phase), contour);
}

ScalarField2D central_dz(const ScalarField2D& f_minus, const ScalarField2D& f_plus, double dz) {
  if (!(dz > 0.0)) throw std::invalid_argument("central_dz: dz must be positive");
  require_same_grid(f_minus, f_plus, "central_dz");
  ScalarField2D out(f_minus.spec());
  const double s = 0.5 / dz;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = (f_plus[k] - f_minus[k]) * s;
  return out;
}

}  // namespace tdcgl
