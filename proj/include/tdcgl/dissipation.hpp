#pragma once

#include <optional>
#include <vector>

#include "tdcgl/field_grid.hpp"
#include "tdcgl/forward_sim.hpp"
#include "tdcgl/nonlinear_fn.hpp"

namespace tdcgl {

/// Spatially uniform intensity sampled on increasing planes.
struct DecaySeries {
  std::vector<double> z_values;
  std::vector<double> intensities;

  void validate() const;
};

/// One (I, dI/dz) plane pair from an independent preparation.
struct Measurement {
  ScalarField2D I;
  ScalarField2D dIdz;
};

struct MeasurementSet {
  std::vector<Measurement> entries;
};

/// Collapses uniform planes to a series; rejects a plane whose relative
/// standard deviation exceeds uniformity_tol.
DecaySeries decay_series_from_planes(const std::vector<double>& z, const std::vector<ScalarField2D>& planes,
                                     double uniformity_tol = 1e-6);

/// -(1/2I) dI/dz at every interior sample of the series, as a table in I.
/// Without alpha the table holds g/alpha; with alpha it holds g.
NonlinearFn g_plane_wave(const DecaySeries& series, std::optional<double> alpha = std::nullopt);

/// Bin-averaged (eta/alpha)(1/sqrt I) lap sqrt I - (1/2I) dI/dz over all
/// measurements; n_bins equal-width intensity bins, empty bins omitted.
NonlinearFn g_averaged(const MeasurementSet& ms, double eta_over_alpha, int n_bins = 64);

/// Evolves a uniform field of intensity I_start on a small grid and records
/// n_planes planes, steps_per_plane RK4 steps apart (the first at z = 0).
DecaySeries prepare_plane_wave(const ModelSpec& model, double I_start, double dz, int steps_per_plane, int n_planes);

/// g/alpha table from one three-plane preparation per starting intensity.
NonlinearFn measure_g_plane_wave(const ModelSpec& model, const std::vector<double>& start_levels, double dz,
                                 int steps_per_plane);

/// n levels spread evenly over (0, I_max], starting at I_max/n.
std::vector<double> plane_wave_levels(double I_max, int n);

}  // namespace tdcgl
