#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "test_support.hpp"
#include "tdcgl/dissipation.hpp"
#include "tdcgl/forward_sim.hpp"

using namespace tdcgl;
using test::sample;

namespace {

DecaySeries exponential_series(double I0, double g0, double dz, int n) {
  DecaySeries s;
  for (int k = 0; k < n; ++k) {
    s.z_values.push_back(k * dz);
    s.intensities.push_back(I0 * std::exp(-2.0 * g0 * k * dz));
  }
  return s;
}

// Middle plane and central z derivative of a short unphased evolution.
Measurement measure(const ScalarField2D& I0, const ModelSpec& m, double dz, int steps) {
  ComplexField2D psi = ComplexField2D::from_polar(I0, ScalarField2D(I0.spec()));
  std::vector<ScalarField2D> planes{psi.intensity()};
  for (int p = 0; p < 2; ++p) {
    for (int s = 0; s < steps; ++s) psi = rk4_step(psi, m, dz);
    planes.push_back(psi.intensity());
  }
  return {planes[1], central_dz(planes[0], planes[2], steps * dz)};
}

// Ten weakly rippled backgrounds spanning the intensity range, each with its own ripple direction.
MeasurementSet rippled_set(const ModelSpec& m) {
  const GridSpec g = GridSpec::square(33);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  MeasurementSet ms;
  for (int e = 1; e <= 10; ++e) {
    const double level = 0.15 * e, th = angle(rng);
    const ScalarField2D I = sample(g, [=](double x, double y) {
      return level * (1.0 + 0.01 * std::cos(2.0 * std::numbers::pi * (std::cos(th) * x + std::sin(th) * y)));
    });
    ms.entries.push_back(measure(I, m, 1e-6, 10));
  }
  return ms;
}

double worst_relative(const NonlinearFn& table, double c, double p) {
  double worst = 0.0;
  for (std::size_t k = 0; k < table.xs().size(); ++k) {
    const double expected = c * std::pow(table.xs()[k], p);
    worst = std::max(worst, std::abs(table.ys()[k] / expected - 1.0));
  }
  return worst;
}

}  // namespace

TEST_SUITE("dissipation") {

TEST_CASE("a constant series has no dissipation") {
  DecaySeries s;
  s.z_values = {0.0, 0.1, 0.2, 0.3};
  s.intensities = {2.0, 2.0, 2.0, 2.0};
  const NonlinearFn t = g_plane_wave(s);
  REQUIRE(t.xs().size() == 1);  // equal intensities share one entry
  for (double y : t.ys()) CHECK(y == 0.0);
}

TEST_CASE("an exponential series recovers its rate") {
  const double g0 = 0.7, dz = 1e-4;
  const NonlinearFn t = g_plane_wave(exponential_series(3.0, g0, dz, 9));
  REQUIRE(t.xs().size() == 7);
  // The sinh(x)/x bias of a central difference stays below 1e-8 at this spacing.
  for (double y : t.ys()) CHECK(y == doctest::Approx(g0).epsilon(1e-8));
  const NonlinearFn scaled = g_plane_wave(exponential_series(3.0, g0, dz, 5), 2.0);
  for (double y : scaled.ys()) CHECK(y == doctest::Approx(2.0 * g0).epsilon(1e-8));
}

TEST_CASE("invalid series are rejected") {
  DecaySeries s;
  s.z_values = {0.0, 0.1};
  s.intensities = {1.0, 1.0};
  CHECK_THROWS_AS(g_plane_wave(s), std::invalid_argument);
  s.z_values = {0.0, 0.1, 0.1};
  s.intensities = {1.0, 1.0, 1.0};
  CHECK_THROWS_AS(g_plane_wave(s), std::invalid_argument);
  const GridSpec g = GridSpec::square(9);
  const ScalarField2D ramp = sample(g, [](double x, double) { return 1.0 + x; });
  CHECK_THROWS_AS(decay_series_from_planes({0.0, 1.0, 2.0}, {ramp, ramp, ramp}), std::invalid_argument);
}

TEST_CASE("uniform intensity decays exponentially under constant dissipation") {
  ModelSpec m;
  m.alpha = 1.5;
  m.f = NonlinearFn::zero();
  m.g = NonlinearFn::power(2.0, 0.0);
  const double dz = 1e-4;
  const DecaySeries s = prepare_plane_wave(m, 4.0, dz, 10, 6);
  for (std::size_t k = 0; k < s.intensities.size(); ++k)
    CHECK(std::abs(s.intensities[k] / (4.0 * std::exp(-2.0 * 2.0 * s.z_values[k] / m.alpha)) - 1.0) < 1e-6);
}

TEST_CASE("plane-wave measurement recovers 3 I^2 to half a percent") {
  const ModelSpec m;
  const NonlinearFn t = measure_g_plane_wave(m, plane_wave_levels(1.5, 30), 1e-6, 10);
  REQUIRE(t.xs().size() == 30);
  CHECK(worst_relative(t, 3.0, 2.0) < 0.005);
}

TEST_CASE("plane-wave levels") {
  const std::vector<double> l = plane_wave_levels(2.0, 4);
  REQUIRE(l.size() == 4);
  CHECK(l.front() == doctest::Approx(0.5));
  CHECK(l.back() == doctest::Approx(2.0));
  CHECK_THROWS_AS(plane_wave_levels(0.0, 4), std::invalid_argument);
}

TEST_CASE("averaged estimator on uniform data equals the plane-wave estimate") {
  const GridSpec g = GridSpec::square(17);
  const double g0 = 1.25;
  MeasurementSet ms;
  for (double level : {0.5, 1.0, 2.0}) {
    const ScalarField2D I(g, level);
    ms.entries.push_back({I, (-2.0 * g0) * I});
  }
  const NonlinearFn t = g_averaged(ms, 2.0);
  REQUIRE(t.xs().size() == 3);
  for (double y : t.ys()) CHECK(y == doctest::Approx(g0).epsilon(1e-12));
}

TEST_CASE("repeated identical measurements do not change the average") {
  const MeasurementSet ms = rippled_set(ModelSpec{});
  const NonlinearFn one = g_averaged(MeasurementSet{{ms.entries[3]}}, 2.0, 16);
  const NonlinearFn many = g_averaged(MeasurementSet{std::vector<Measurement>(7, ms.entries[3])}, 2.0, 16);
  REQUIRE(one.xs().size() == many.xs().size());
  for (std::size_t k = 0; k < one.xs().size(); ++k) {
    CHECK(many.xs()[k] == doctest::Approx(one.xs()[k]).epsilon(1e-14));
    CHECK(many.ys()[k] == doctest::Approx(one.ys()[k]).epsilon(1e-13));
  }
}

TEST_CASE("weakly modulated measurements average to 3 I^2 within five percent") {
  const NonlinearFn t = g_averaged(rippled_set(ModelSpec{}), 2.0, 32);
  CHECK(t.xs().size() >= 10);
  CHECK(worst_relative(t, 3.0, 2.0) < 0.05);
}

TEST_CASE("the averaged estimate does not depend on the diffusion coefficient") {
  ModelSpec weak;
  weak.eta = 0.5;
  const NonlinearFn a = g_averaged(rippled_set(weak), 0.5, 32);
  const NonlinearFn b = g_averaged(rippled_set(ModelSpec{}), 2.0, 32);
  CHECK(worst_relative(a, 3.0, 2.0) < 0.05);
  REQUIRE(a.xs().size() == b.xs().size());
  for (std::size_t k = 0; k < a.xs().size(); ++k) CHECK(a.ys()[k] == doctest::Approx(b.ys()[k]).epsilon(0.02));
}

TEST_CASE("averaged estimator rejects empty input") {
  CHECK_THROWS_AS(g_averaged(MeasurementSet{}, 1.0), std::invalid_argument);
}

}
