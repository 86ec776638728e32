#pragma once

#include <cstddef>
#include <vector>

namespace tdcgl {

/// Uniform square grid on the unit square; node (ix, iy) sits at (ix*h, iy*h).
struct GridSpec {
  int nx = 0;
  int ny = 0;
  double h = 0.0;

  /// Square grid with n points per side and h = 1/(n-1). Throws for n < 5.
  static GridSpec square(int n);

  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  double x(int ix) const { return ix * h; }
  double y(int iy) const { return iy * h; }
  std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(ix);
  }
  /// Throws std::invalid_argument unless the grid is square, at least 5 wide and h*(n-1) = 1.
  void validate() const;

  bool operator==(const GridSpec&) const = default;
};

/// Real samples on a GridSpec, row-major with x fastest.
class ScalarField2D {
 public:
  ScalarField2D() = default;
  explicit ScalarField2D(const GridSpec& spec, double fill = 0.0);
  ScalarField2D(const GridSpec& spec, std::vector<double> values);

  const GridSpec& spec() const { return spec_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(int ix, int iy) { return values_[spec_.index(ix, iy)]; }
  double operator()(int ix, int iy) const { return values_[spec_.index(ix, iy)]; }
  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  bool all_finite() const;
  double min() const;
  double max() const;
  double max_abs() const;
  double mean() const;
  /// Grid sum times h^2.
  double integral() const;

  ScalarField2D& operator+=(const ScalarField2D& o);
  ScalarField2D& operator-=(const ScalarField2D& o);
  ScalarField2D& operator*=(double s);
  ScalarField2D& operator+=(double s);

 private:
  GridSpec spec_{};
  std::vector<double> values_;
};

ScalarField2D operator+(ScalarField2D a, const ScalarField2D& b);
ScalarField2D operator-(ScalarField2D a, const ScalarField2D& b);
ScalarField2D operator*(double s, ScalarField2D a);

/// Complex samples stored as separate real and imaginary planes.
struct ComplexField2D {
  ScalarField2D re;
  ScalarField2D im;

  ComplexField2D() = default;
  explicit ComplexField2D(const GridSpec& spec) : re(spec), im(spec) {}
  ComplexField2D(ScalarField2D r, ScalarField2D i);

  const GridSpec& spec() const { return re.spec(); }
  /// Builds sqrt(I) * exp(i*phi).
  static ComplexField2D from_polar(const ScalarField2D& intensity, const ScalarField2D& phase);
  ScalarField2D intensity() const;
  /// Principal value atan2(im, re).
  ScalarField2D phase() const;
  bool all_finite() const;
};

struct Gradient {
  ScalarField2D x;
  ScalarField2D y;
};

/// Equally spaced samples of the circle of radius 1/2 centred in the domain.
struct BoundaryContour {
  GridSpec spec{};
  std::vector<double> px;
  std::vector<double> py;
  /// Outward unit normal at each sample.
  std::vector<double> nx;
  std::vector<double> ny;
  std::vector<double> dl;

  /// Default sample count is 4*(n-1).
  static BoundaryContour inscribed_circle(const GridSpec& spec, int samples = 0);
  std::size_t size() const { return px.size(); }
};

/// Five-point Laplacian; one-sided second-order rows on the edges.
ScalarField2D laplacian(const ScalarField2D& f);
/// Central differences inside, second-order one-sided differences on the edges.
Gradient gradient(const ScalarField2D& f);
/// d(vx)/dx + d(vy)/dy with the gradient stencils.
ScalarField2D divergence(const ScalarField2D& vx, const ScalarField2D& vy);
/// div(c grad u) in compact flux form with face-averaged c inside; c*lap(u) + grad c . grad u on the edges.
ScalarField2D flux_divergence(const ScalarField2D& c, const ScalarField2D& u);
/// |grad f|^2 pointwise.
ScalarField2D gradient_norm_squared(const ScalarField2D& f);

/// Bilinear interpolation at (x, y); throws std::out_of_range outside the grid.
double bilinear(const ScalarField2D& f, double x, double y);
/// Closed-contour integral of grad(phase) . n.
double boundary_flux(const ScalarField2D& phase, const BoundaryContour& contour);
double boundary_flux(const Gradient& grad, const BoundaryContour& contour);

/// (f_plus - f_minus) / (2 dz).
ScalarField2D central_dz(const ScalarField2D& f_minus, const ScalarField2D& f_plus, double dz);

/// Throws std::invalid_argument if the two fields live on different grids.
void require_same_grid(const ScalarField2D& a, const ScalarField2D& b, const char* what);

}  // namespace tdcgl
