#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tdcgl/errors.hpp"
#include "tdcgl/field_grid.hpp"
#include "tdcgl/forward_sim.hpp"
#include "tdcgl/nonlinear_fn.hpp"

namespace tdcgl {

struct RelaxationConfig {
  double epsilon = 1e-7;
  double initial_bump = 0.01;
  int max_outer_iters = 250;
  int n_iso_levels = 100;
  double histogram_bin_width = 1e-3;
  /// Inner phase-retrieval limits.
  int retrieval_max_iters = 400;
  double grad_norm_tol = 1e-6;

  void validate() const;
  bool operator==(const RelaxationConfig&) const = default;
};

struct GridPoint {
  int ix = 0;
  int iy = 0;
  bool operator==(const GridPoint&) const = default;
};

struct IsoIntensityPair {
  GridPoint p1;
  GridPoint p2;
  double level = 0.0;
};

struct PairingOptions {
  /// Nodes closer than this to the edge are never paired.
  int edge_margin = 2;
  /// Largest allowed |I(p1) - I(p2)| as a fraction of max(I) - min(I).
  double match_tolerance = 1e-4;
};

struct HistogramEstimate {
  double peak = 0.0;
  double fwhm = 0.0;
  double bin_width = 0.0;
  /// Left edge of the first bin.
  double origin = 0.0;
  std::vector<long> counts;
  /// Values that entered the histogram after clipping.
  std::size_t samples = 0;
  /// Pairs rejected before binning (degenerate, nonpositive, clipped).
  std::size_t skipped = 0;

  double bin_center(std::size_t k) const { return origin + (static_cast<double>(k) + 0.5) * bin_width; }
};

/// Mode and width of values binned at bin_width, after clipping to
/// [median/4, 4*median]. Throws std::invalid_argument on empty input.
HistogramEstimate histogram_estimate(const std::vector<double>& values, double bin_width);

/// Disjoint equal-intensity pairs on n_levels levels strictly inside (min I, max I).
/// Throws std::invalid_argument for a constant field.
std::vector<IsoIntensityPair> find_iso_pairs(const ScalarField2D& I, int n_levels, const PairingOptions& opts = {});

/// Histogram of (dI1/dz - dI2/dz) / (2 sqrt(I1) lap sqrt(I1) - 2 sqrt(I2) lap sqrt(I2)) over
/// iso pairs at the first midplane, assuming a flat initial phase.
HistogramEstimate seed_eta_over_alpha(const IntensityTriple& triple, const RelaxationConfig& cfg = {});

/// Fields entering the momentum balance at the central plane:
/// K = dphi/dz - (eta/alpha)(1/I) div(I grad phi) + |grad phi|^2 / 2 and D = (1/sqrt I) lap sqrt I.
struct MomentumTerms {
  ScalarField2D K;
  ScalarField2D D;
};

MomentumTerms momentum_terms(const ScalarField2D& phi_tilde, const ScalarField2D& dphi_tilde_dz, const ScalarField2D& I,
                             double eta_over_alpha);
/// Terms at z2 from scaled phases retrieved at z1 and z3.
MomentumTerms momentum_terms_between(const ScalarField2D& phi_z1, const ScalarField2D& phi_z3, const ScalarField2D& I_z2,
                                     double dz_plane, double eta_over_alpha);

/// sqrt(2 (D1 - D2) / (K1 - K2)); empty when |K1 - K2| is below k_floor or the ratio is not positive.
std::optional<double> alpha_from_pair(const IsoIntensityPair& pair, const MomentumTerms& terms, double k_floor);
std::optional<double> alpha_from_pair(const IsoIntensityPair& pair, const ScalarField2D& phi_tilde,
                                      const ScalarField2D& dphi_tilde_dz, const ScalarField2D& I, double eta_over_alpha);

/// Next fractional change of eta/alpha from two successive boundary fluxes.
double diffusion_update(double N_k, double N_k1, double X);

struct RelaxationRecord {
  int k = 0;
  double eta_over_alpha = 0.0;
  double eta = 0.0;
  double alpha = 0.0;
  double N = 0.0;
  /// Fractional change applied to eta/alpha after this iteration.
  double X = 0.0;
};

struct RelaxationTrace {
  std::vector<RelaxationRecord> records;
  bool converged = false;
  /// Scaled phases at z1 and z3 from the last iteration.
  ScalarField2D phi_z1;
  ScalarField2D phi_z3;
  HistogramEstimate alpha_histogram;

  double final_eta_over_alpha() const { return records.back().eta_over_alpha; }
  double final_eta() const { return records.back().eta; }
  double final_alpha() const { return records.back().alpha; }
};

/// Outer loop that adjusts eta/alpha until the boundary flux at z1 vanishes.
/// Throws RelaxationError when an inner retrieval fails.
RelaxationTrace relaxation_run(const IntensityTriple& triple, const NonlinearFn& g_over_alpha, double eta_over_alpha_0,
                               const RelaxationConfig& cfg);

class RelaxationError : public NonConvergence {
 public:
  RelaxationError(const std::string& what, std::vector<RelaxationTrace> traces)
      : NonConvergence(what), traces_(std::move(traces)) {}
  const std::vector<RelaxationTrace>& traces() const { return traces_; }

 private:
  std::vector<RelaxationTrace> traces_;
};

struct InferenceResult {
  double eta_hat = 0.0;
  double eta_over_alpha_hat = 0.0;
  double alpha_hat = 0.0;
  double alpha_fwhm = 0.0;
  HistogramEstimate seed;
  HistogramEstimate alpha_histogram;
  /// Unscaled phases alpha*phi_tilde/2 with zero mean.
  ScalarField2D phi_z1;
  ScalarField2D phi_z3;
  NonlinearFn f_table;
  /// Run that starts above its asymptote and run that starts below.
  RelaxationTrace trace_up;
  RelaxationTrace trace_down;
  double N_final = 0.0;
};

InferenceResult infer(const IntensityTriple& triple, const NonlinearFn& g_over_alpha, const RelaxationConfig& cfg);

/// f = (alpha^2/2) K - D at interior nodes, binned by intensity into n_bins
/// equal-width bins; each bin keeps the median intensity and median f.
NonlinearFn extract_f(const ScalarField2D& phi_tilde_z1, const ScalarField2D& phi_tilde_z3, const ScalarField2D& I_z2,
                      double dz_plane, double eta_hat, double alpha_hat, int n_bins = 64);

/// Least-squares fit offset + amplitude*sin(pi I) over a table, with the
/// Pearson correlation between table values and sin(pi I).
struct SineFit {
  double offset = 0.0;
  double amplitude = 0.0;
  double correlation = 0.0;
};
SineFit fit_sine(const NonlinearFn& table);

}  // namespace tdcgl
