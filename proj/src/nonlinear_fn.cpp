#include "tdcgl/nonlinear_fn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tdcgl {

NonlinearFn NonlinearFn::zero() { return NonlinearFn{}; }

NonlinearFn NonlinearFn::sine_scaled(double amplitude) {
  NonlinearFn f;
  f.kind_ = Kind::sine_scaled;
  f.a_ = amplitude;
  return f;
}

NonlinearFn NonlinearFn::power(double coefficient, double exponent) {
  NonlinearFn f;
  f.kind_ = Kind::power;
  f.a_ = coefficient;
  f.p_ = exponent;
  return f;
}

NonlinearFn NonlinearFn::tabulated(std::vector<double> xs, std::vector<double> ys) {
  if (xs.empty() || xs.size() != ys.size()) throw std::invalid_argument("tabulated function needs matching, nonempty columns");
  for (std::size_t k = 1; k < xs.size(); ++k)
    if (!(xs[k] > xs[k - 1])) throw std::invalid_argument("tabulated abscissae must be strictly increasing");
  for (std::size_t k = 0; k < xs.size(); ++k)
    if (!std::isfinite(xs[k]) || !std::isfinite(ys[k])) throw std::invalid_argument("tabulated values must be finite");
  NonlinearFn f;
  f.kind_ = Kind::tabulated;
  f.xs_ = std::move(xs);
  f.ys_ = std::move(ys);
  return f;
}

double NonlinearFn::operator()(double I) const {
  switch (kind_) {
    case Kind::zero:
      return 0.0;
    case Kind::sine_scaled:
      return a_ * std::sin(std::numbers::pi * I);
    case Kind::power:
      if (p_ == 0.0) return a_;
      if (p_ == 1.0) return a_ * I;
      if (p_ == 2.0) return a_ * I * I;
      if (p_ == 3.0) return a_ * I * I * I;
      return a_ * std::pow(I, p_);
    case Kind::tabulated: {
      if (I <= xs_.front()) return ys_.front();
      if (I >= xs_.back()) return ys_.back();
      const auto it = std::upper_bound(xs_.begin(), xs_.end(), I);
      const std::size_t k = static_cast<std::size_t>(it - xs_.begin());
      const double t = (I - xs_[k - 1]) / (xs_[k] - xs_[k - 1]);
      return ys_[k - 1] + t * (ys_[k] - ys_[k - 1]);
    }
  }
  return 0.0;
}

ScalarField2D NonlinearFn::apply(const ScalarField2D& intensity) const {
  ScalarField2D out(intensity.spec());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = (*this)(intensity[k]);
  return out;
}

}  // namespace tdcgl
