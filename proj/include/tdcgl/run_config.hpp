#pragma once

#include <string>

#include "tdcgl/forward_sim.hpp"
#include "tdcgl/nonlinear_fn.hpp"
#include "tdcgl/parameter_inference.hpp"

namespace tdcgl {

/// Plane-wave dissipation measurement used by the round trip.
struct DissipationPlan {
  int levels = 128;
  double dz = 1e-6;
  int steps_per_plane = 10;
  /// Largest start intensity relative to max(I0).
  double headroom = 1.05;

  void validate() const;
  bool operator==(const DissipationPlan&) const = default;
};

/// Pass limits for the round-trip report.
struct Thresholds {
  double eta_rel = 0.005;
  double alpha_rel = 0.05;
  double sigma_phi = 0.02;
  double sigma_grad = 0.02;
  double f_amplitude_rel = 0.03;
  double f_correlation = 0.999;

  bool operator==(const Thresholds&) const = default;
};

/// Everything a command needs, stored as "key = value" lines.
struct RunConfig {
  int grid_n = 257;
  ModelSpec model;
  InitialConditionSpec ic = InitialConditionSpec::centered_blob(0.5);
  EvolutionPlan plan;
  RelaxationConfig relax;
  DissipationPlan dissipation;
  Thresholds thresholds;

  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

/// "zero", "sine_scaled A", "power c p" or "table x1:y1,x2:y2,...".
std::string format_function(const NonlinearFn& fn);
NonlinearFn parse_function(const std::string& text);

std::string serialize(const RunConfig& cfg);
/// Throws FormatError on unknown keys, duplicates or malformed values.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);
void save_run_config(const std::string& path, const RunConfig& cfg);

}  // namespace tdcgl
