#pragma once

#include <vector>

#include "tdcgl/field_grid.hpp"

namespace tdcgl {

/// Real function of intensity used for the conservative and dissipative terms.
class NonlinearFn {
 public:
  enum class Kind { zero, sine_scaled, power, tabulated };

  NonlinearFn() = default;
  static NonlinearFn zero();
  /// amplitude * sin(pi I)
  static NonlinearFn sine_scaled(double amplitude);
  /// coefficient * I^exponent
  static NonlinearFn power(double coefficient, double exponent);
  /// Piecewise-linear through (xs, ys); held constant beyond either end.
  static NonlinearFn tabulated(std::vector<double> xs, std::vector<double> ys);

  double operator()(double intensity) const;
  ScalarField2D apply(const ScalarField2D& intensity) const;

  Kind kind() const { return kind_; }
  double amplitude() const { return a_; }
  double coefficient() const { return a_; }
  double exponent() const { return p_; }
  const std::vector<double>& xs() const { return xs_; }
  const std::vector<double>& ys() const { return ys_; }

  bool operator==(const NonlinearFn&) const = default;

 private:
  Kind kind_ = Kind::zero;
  double a_ = 0.0;
  double p_ = 0.0;
  std::vector<double> xs_;
  std::vector<double> ys_;
};

}  // namespace tdcgl
