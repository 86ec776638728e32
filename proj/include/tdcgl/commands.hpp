#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "tdcgl/run_config.hpp"

namespace tdcgl {

/// Process exit codes shared by all commands.
enum ExitCode : int {
  exit_ok = 0,
  exit_threshold = 1,
  exit_nonconvergence = 2,
  exit_blowup = 3,
  exit_format = 4,
};

/// Runs body and maps library exceptions to exit codes, logging the message.
int run_guarded(const std::function<int()>& body, std::ostream& log);

/// Writes intensity_z{0,2,4}.tdcgl, phase_z{0,2,4}.tdcgl, config.txt and manifest.txt.
void simulate_to(const RunConfig& cfg, const std::string& out_dir, std::ostream& log);

/// Plane-wave g/alpha table for the model in cfg, written as CSV (I,g_over_alpha).
void measure_g_to(const RunConfig& cfg, double I_max, const std::string& out_path, std::ostream& log);

/// Reads three intensity snapshots and a g/alpha table ("zero" or a CSV path).
/// Only relaxation settings of cfg are used. Writes estimates.txt, phase_z1/z3,
/// f_table.csv, trace_up/down.csv, alpha_histogram.csv and seed_histogram.csv.
/// Returns exit_nonconvergence when the relaxation fails, after writing traces.
int infer_files(const std::array<std::string, 3>& intensity_paths, const std::string& g_table,
                const RelaxationConfig& relax, const std::string& out_dir, std::ostream& log);

struct RoundtripReport {
  double eta_true = 0.0;
  double alpha_true = 0.0;
  double eta_hat = 0.0;
  double alpha_hat = 0.0;
  double alpha_fwhm = 0.0;
  double sigma_phi = 0.0;
  double sigma_grad = 0.0;
  double f_offset = 0.0;
  double f_amplitude = 0.0;
  double f_correlation = 0.0;
  bool f_checked = false;
  bool eta_ok = false;
  bool alpha_ok = false;
  bool phase_ok = false;
  bool f_ok = false;
  int exit_code = exit_ok;
  double seconds = 0.0;

  bool passed() const { return eta_ok && alpha_ok && phase_ok && f_ok; }
};

/// simulate, measure g, infer from files, then compare with ground truth.
/// Writes report.txt in out_dir.
RoundtripReport roundtrip(const RunConfig& cfg, const std::string& out_dir, std::ostream& log);
std::string format_report(const RoundtripReport& r);

struct SweepRow {
  double A_phi = 0.0;
  double mean_grad_phi = 0.0;
  std::string status;
  int iterations = 0;
  double sigma_phi = 0.0;
  double sigma_grad = 0.0;
};

/// Retrieval at z1 with the true coefficients for each A_phi; returns rows and
/// writes convergence_map.csv.
std::vector<SweepRow> sweep_retrieval(const RunConfig& cfg, const std::vector<double>& a_phi,
                                      const std::string& out_dir, std::ostream& log);

/// Full round trip for each A_phi in run_<k> subdirectories; writes roundtrip_map.csv.
std::vector<RoundtripReport> sweep_roundtrip(const RunConfig& cfg, const std::vector<double>& a_phi,
                                             const std::string& out_dir, std::ostream& log);

void write_estimates(const std::string& path, const std::vector<std::pair<std::string, std::string>>& entries);
/// Reads "key = value" lines.
std::vector<std::pair<std::string, std::string>> read_estimates(const std::string& path);

}  // namespace tdcgl
