#include "tdcgl/dissipation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "tdcgl/phase_retrieval.hpp"

namespace tdcgl {

void DecaySeries::validate() const {
  if (z_values.size() != intensities.size()) throw std::invalid_argument("decay series: length mismatch");
  if (z_values.size() < 3) throw std::invalid_argument("decay series: need at least three planes");
  for (std::size_t k = 1; k < z_values.size(); ++k)
    if (!(z_values[k] > z_values[k - 1])) throw std::invalid_argument("decay series: z must increase");
  for (double I : intensities)
    if (!(I > 0.0) || !std::isfinite(I)) throw std::invalid_argument("decay series: intensities must be positive");
}

DecaySeries decay_series_from_planes(const std::vector<double>& z, const std::vector<ScalarField2D>& planes,
                                     double uniformity_tol) {
  if (z.size() != planes.size()) throw std::invalid_argument("decay series: length mismatch");
  DecaySeries s;
  for (std::size_t k = 0; k < planes.size(); ++k) {
    const ScalarField2D& p = planes[k];
    const double m = p.mean();
    double var = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) var += (p[i] - m) * (p[i] - m);
    const double rel = std::sqrt(var / static_cast<double>(p.size())) / std::abs(m);
    if (!(rel <= uniformity_tol))
      throw std::invalid_argument("plane " + std::to_string(k) + " is not uniform (relative std " + std::to_string(rel) + ")");
    s.z_values.push_back(z[k]);
    s.intensities.push_back(m);
  }
  s.validate();
  return s;
}

namespace {

/// Builds a table from unsorted samples, averaging samples that share an abscissa.
NonlinearFn table_from_samples(std::vector<std::pair<double, double>> samples) {
  std::sort(samples.begin(), samples.end());
  std::vector<double> xs, ys;
  std::size_t i = 0;
  while (i < samples.size()) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < samples.size() && samples[j].first == samples[i].first) sum += samples[j++].second;
    xs.push_back(samples[i].first);
    ys.push_back(sum / static_cast<double>(j - i));
    i = j;
  }
  return NonlinearFn::tabulated(std::move(xs), std::move(ys));
}

}  // namespace

NonlinearFn g_plane_wave(const DecaySeries& series, std::optional<double> alpha) {
  series.validate();
  const double scale = alpha ? *alpha : 1.0;
  std::vector<std::pair<double, double>> samples;
  const auto& z = series.z_values;
  const auto& I = series.intensities;
  for (std::size_t k = 1; k + 1 < I.size(); ++k) {
    const double dIdz = (I[k + 1] - I[k - 1]) / (z[k + 1] - z[k - 1]);
    samples.emplace_back(I[k], -scale * dIdz / (2.0 * I[k]));
  }
  return table_from_samples(std::move(samples));
}

NonlinearFn g_averaged(const MeasurementSet& ms, double eta_over_alpha, int n_bins) {
  if (ms.entries.empty()) throw std::invalid_argument("g_averaged: empty measurement set");
  if (n_bins < 1) throw std::invalid_argument("g_averaged: n_bins must be positive");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& m : ms.entries) {
    require_same_grid(m.I, m.dIdz, "g_averaged");
    lo = std::min(lo, m.I.min());
    hi = std::max(hi, m.I.max());
  }
  const double width = (hi - lo) / n_bins;
  const std::size_t nb = static_cast<std::size_t>(n_bins);
  // Per-measurement bin sums are combined pairwise so identical measurements average exactly.
  std::vector<std::vector<double>> sum_g(ms.entries.size(), std::vector<double>(nb, 0.0));
  std::vector<std::vector<double>> sum_I(ms.entries.size(), std::vector<double>(nb, 0.0));
  std::vector<std::vector<long>> count(ms.entries.size(), std::vector<long>(nb, 0));
  for (std::size_t e = 0; e < ms.entries.size(); ++e) {
    const auto& m = ms.entries[e];
    const ScalarField2D D = amplitude_curvature(m.I);
    for (std::size_t k = 0; k < m.I.size(); ++k) {
      const double I = m.I[k];
      const std::size_t b = width > 0.0 ? std::min(nb - 1, static_cast<std::size_t>((I - lo) / width)) : 0;
      sum_g[e][b] += eta_over_alpha * D[k] - m.dIdz[k] / (2.0 * I);
      sum_I[e][b] += I;
      ++count[e][b];
    }
  }
  auto pairwise = [](auto& rows, std::size_t b) {
    std::vector<double> v;
    for (const auto& r : rows) v.push_back(static_cast<double>(r[b]));
    while (v.size() > 1) {
      std::vector<double> next;
      for (std::size_t i = 0; i + 1 < v.size(); i += 2) next.push_back(v[i] + v[i + 1]);
      if (v.size() % 2) next.push_back(v.back());
      v = std::move(next);
    }
    return v.front();
  };
  std::vector<std::pair<double, double>> samples;
  for (std::size_t b = 0; b < nb; ++b) {
    const double c = pairwise(count, b);
    if (c == 0.0) continue;
    samples.emplace_back(pairwise(sum_I, b) / c, pairwise(sum_g, b) / c);
  }
  return table_from_samples(std::move(samples));
}

DecaySeries prepare_plane_wave(const ModelSpec& model, double I_start, double dz, int steps_per_plane, int n_planes) {
  if (!(I_start > 0.0)) throw std::invalid_argument("plane wave: starting intensity must be positive");
  if (steps_per_plane < 1 || n_planes < 3) throw std::invalid_argument("plane wave: need three planes and one step per plane");
  const GridSpec g = GridSpec::square(5);
  ComplexField2D psi(ScalarField2D(g, std::sqrt(I_start)), ScalarField2D(g, 0.0));
  std::vector<double> z{0.0};
  std::vector<ScalarField2D> planes{psi.intensity()};
  for (int p = 1; p < n_planes; ++p) {
    for (int s = 0; s < steps_per_plane; ++s) psi = rk4_step(psi, model, dz);
    z.push_back(p * steps_per_plane * dz);
    planes.push_back(psi.intensity());
  }
  return decay_series_from_planes(z, planes);
}

NonlinearFn measure_g_plane_wave(const ModelSpec& model, const std::vector<double>& start_levels, double dz,
                                 int steps_per_plane) {
  if (start_levels.empty()) throw std::invalid_argument("plane wave: no starting levels");
  std::vector<std::pair<double, double>> samples;
  for (double level : start_levels) {
    const NonlinearFn t = g_plane_wave(prepare_plane_wave(model, level, dz, steps_per_plane, 3));
    for (std::size_t k = 0; k < t.xs().size(); ++k) samples.emplace_back(t.xs()[k], t.ys()[k]);
  }
  return table_from_samples(std::move(samples));
}

std::vector<double> plane_wave_levels(double I_max, int n) {
  if (!(I_max > 0.0) || n < 1) throw std::invalid_argument("plane wave levels: need a positive maximum and count");
  std::vector<double> levels;
  for (int k = 1; k <= n; ++k) levels.push_back(I_max * k / n);
  return levels;
}

}  // namespace tdcgl
