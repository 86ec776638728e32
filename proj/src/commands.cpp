#include "tdcgl/commands.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "tdcgl/dissipation.hpp"
#include "tdcgl/errors.hpp"
#include "tdcgl/forward_sim.hpp"
#include "tdcgl/parameter_inference.hpp"
#include "tdcgl/phase_retrieval.hpp"
#include "tdcgl/snapshot_io.hpp"

namespace fs = std::filesystem;

namespace tdcgl {

namespace {

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw FormatError("cannot create directory " + dir + ": " + ec.message());
}

std::string plane_name(const std::string& what, int index) { return what + "_z" + std::to_string(index) + ".tdcgl"; }

void write_trace(const std::string& path, const RelaxationTrace& t) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path);
  out << "k,eta_over_alpha,eta,alpha,N,X\n";
  for (const RelaxationRecord& r : t.records)
    out << r.k << ',' << format_double(r.eta_over_alpha) << ',' << format_double(r.eta) << ','
        << format_double(r.alpha) << ',' << format_double(r.N) << ',' << format_double(r.X) << '\n';
}

void write_histogram(const std::string& path, const std::string& name, const HistogramEstimate& h) {
  std::vector<double> centers, counts;
  for (std::size_t k = 0; k < h.counts.size(); ++k) {
    centers.push_back(h.bin_center(k));
    counts.push_back(static_cast<double>(h.counts[k]));
  }
  write_table_csv(path, name, "count", centers, counts);
}

/// g(I)/alpha sampled on [0, I_max] from the model's known g.
NonlinearFn sampled_g_over_alpha(const ModelSpec& model, double I_max, int n = 1024) {
  std::vector<double> xs(n), ys(n);
  for (int k = 0; k < n; ++k) {
    xs[k] = I_max * k / (n - 1);
    ys[k] = model.g(xs[k]) / model.alpha;
  }
  return NonlinearFn::tabulated(std::move(xs), std::move(ys));
}

double mean_gradient_magnitude(const ScalarField2D& phi) {
  const Gradient g = gradient(phi);
  double s = 0.0;
  for (std::size_t k = 0; k < phi.size(); ++k) s += std::hypot(g.x[k], g.y[k]);
  return s / static_cast<double>(phi.size());
}

}  // namespace

int run_guarded(const std::function<int()>& body, std::ostream& log) {
  try {
    return body();
  } catch (const NonConvergence& e) {
    log << "error: non-convergence: " << e.what() << '\n';
    return exit_nonconvergence;
  } catch (const NumericalBlowup& e) {
    log << "error: numerical blowup at step " << e.step() << ": " << e.what() << '\n';
    return exit_blowup;
  } catch (const FormatError& e) {
    log << "error: " << e.what() << '\n';
    return exit_format;
  } catch (const fs::filesystem_error& e) {
    log << "error: " << e.what() << '\n';
    return exit_format;
  } catch (const std::invalid_argument& e) {
    log << "error: invalid input: " << e.what() << '\n';
    return exit_format;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return exit_threshold;
  }
}

void write_estimates(const std::string& path, const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path);
  for (const auto& [k, v] : entries) out << k << " = " << v << '\n';
  if (!out) throw FormatError("write failed for " + path);
}

std::vector<std::pair<std::string, std::string>> read_estimates(const std::string& path) {
  ReadAudit::record(path);
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  std::vector<std::pair<std::string, std::string>> out;
  for (std::string line; std::getline(in, line);) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    out.emplace_back(line.substr(0, eq), line.substr(eq + 3));
  }
  return out;
}

void simulate_to(const RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
  cfg.validate();
  ensure_dir(out_dir);
  const GridSpec grid = GridSpec::square(cfg.grid_n);
  const EvolutionResult ev = evolve(initial_field(cfg.ic, grid), cfg.model, cfg.plan);
  std::vector<std::pair<std::string, std::string>> manifest = {
      {"grid_n", std::to_string(cfg.grid_n)},
      {"h", format_double(grid.h)},
      {"dz", format_double(cfg.plan.dz)},
      {"dz_plane", format_double(ev.dz_plane)},
      {"n_snapshots", std::to_string(ev.z.size())},
      {"alpha", format_double(cfg.model.alpha)},
      {"eta", format_double(cfg.model.eta)},
      {"f", format_function(cfg.model.f)},
      {"g", format_function(cfg.model.g)},
  };
  for (std::size_t j = 0; j < ev.z.size(); ++j) {
    const int idx = 2 * static_cast<int>(j);
    write_snapshot(join(out_dir, plane_name("intensity", idx)), ev.intensity[j], ev.z[j], SnapshotKind::intensity);
    write_snapshot(join(out_dir, plane_name("phase", idx)), ev.phase[j], ev.z[j], SnapshotKind::phase);
    manifest.emplace_back("z" + std::to_string(idx), format_double(ev.z[j]));
  }
  write_estimates(join(out_dir, "manifest.txt"), manifest);
  save_run_config(join(out_dir, "config.txt"), cfg);
  log << "simulate: " << ev.z.size() << " snapshots, dz_plane " << ev.dz_plane << " -> " << out_dir << '\n';
}

void measure_g_to(const RunConfig& cfg, double I_max, const std::string& out_path, std::ostream& log) {
  cfg.validate();
  const NonlinearFn table = measure_g_plane_wave(
      cfg.model, plane_wave_levels(cfg.dissipation.headroom * I_max, cfg.dissipation.levels), cfg.dissipation.dz,
      cfg.dissipation.steps_per_plane);
  write_table_csv(out_path, "I", "g_over_alpha", table.xs(), table.ys());
  log << "measure-g: " << table.xs().size() << " levels up to " << table.xs().back() << " -> " << out_path << '\n';
}

int infer_files(const std::array<std::string, 3>& intensity_paths, const std::string& g_table,
                const RelaxationConfig& relax, const std::string& out_dir, std::ostream& log) {
  relax.validate();
  std::array<Snapshot, 3> snaps;
  for (int j = 0; j < 3; ++j) {
    snaps[j] = read_snapshot(intensity_paths[j]);
    if (snaps[j].kind != SnapshotKind::intensity)
      throw FormatError(intensity_paths[j] + ": expected an intensity snapshot, found " + to_string(snaps[j].kind));
  }
  for (int j = 1; j < 3; ++j) {
    if (snaps[j].nx != snaps[0].nx || snaps[j].ny != snaps[0].ny || snaps[j].h != snaps[0].h)
      throw FormatError("grid mismatch between " + intensity_paths[0] + " (" + std::to_string(snaps[0].nx) + "x" +
                        std::to_string(snaps[0].ny) + ") and " + intensity_paths[j] + " (" +
                        std::to_string(snaps[j].nx) + "x" + std::to_string(snaps[j].ny) + ")");
  }
  const double d1 = snaps[1].z - snaps[0].z;
  const double d2 = snaps[2].z - snaps[1].z;
  if (!(d1 > 0.0) || std::abs(d2 - d1) > 1e-9 * d1)
    throw FormatError("planes are not equally spaced in z: " + intensity_paths[0] + ", " + intensity_paths[1] + ", " +
                      intensity_paths[2]);

  IntensityTriple triple{snaps[0].field(), snaps[1].field(), snaps[2].field(), 0.5 * (snaps[2].z - snaps[0].z)};
  try {
    triple.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("intensity triple: ") + e.what());
  }
  const NonlinearFn g = g_table == "zero" ? NonlinearFn::zero() : read_table_csv(g_table);

  ensure_dir(out_dir);
  InferenceResult res;
  try {
    res = infer(triple, g, relax);
  } catch (const RelaxationError& e) {
    const auto& traces = e.traces();
    for (std::size_t k = 0; k < traces.size(); ++k)
      write_trace(join(out_dir, "trace_run" + std::to_string(k + 1) + ".csv"), traces[k]);
    write_estimates(join(out_dir, "estimates.txt"), {{"status", "non-converged"}, {"reason", e.what()}});
    log << "infer: non-convergence: " << e.what() << '\n';
    return exit_nonconvergence;
  }

  const SineFit fit = fit_sine(res.f_table);
  // Stopping at max_outer_iters is not an error, but the status says so.
  const bool relaxed = res.trace_up.converged && res.trace_down.converged;
  const double z1 = 0.5 * (snaps[0].z + snaps[1].z);
  const double z3 = 0.5 * (snaps[1].z + snaps[2].z);
  write_snapshot(join(out_dir, "phase_z1.tdcgl"), res.phi_z1, z1, SnapshotKind::phase);
  write_snapshot(join(out_dir, "phase_z3.tdcgl"), res.phi_z3, z3, SnapshotKind::phase);
  write_table_csv(join(out_dir, "f_table.csv"), "I", "f", res.f_table.xs(), res.f_table.ys());
  write_trace(join(out_dir, "trace_up.csv"), res.trace_up);
  write_trace(join(out_dir, "trace_down.csv"), res.trace_down);
  write_histogram(join(out_dir, "alpha_histogram.csv"), "alpha", res.alpha_histogram);
  write_histogram(join(out_dir, "seed_histogram.csv"), "eta_over_alpha", res.seed);
  write_estimates(join(out_dir, "estimates.txt"),
                  {{"status", relaxed ? "converged" : "iteration_cap"},
                   {"converged_up", res.trace_up.converged ? "true" : "false"},
                   {"converged_down", res.trace_down.converged ? "true" : "false"},
                   {"eta_hat", format_double(res.eta_hat)},
                   {"alpha_hat", format_double(res.alpha_hat)},
                   {"alpha_fwhm", format_double(res.alpha_fwhm)},
                   {"eta_over_alpha_hat", format_double(res.eta_over_alpha_hat)},
                   {"eta_up", format_double(res.trace_up.final_eta())},
                   {"eta_down", format_double(res.trace_down.final_eta())},
                   {"iterations_up", std::to_string(res.trace_up.records.size())},
                   {"iterations_down", std::to_string(res.trace_down.records.size())},
                   {"seed_eta_over_alpha", format_double(res.seed.peak)},
                   {"seed_fwhm", format_double(res.seed.fwhm)},
                   {"N_final", format_double(res.N_final)},
                   {"dz_plane", format_double(triple.dz_plane)},
                   {"f_offset", format_double(fit.offset)},
                   {"f_amplitude", format_double(fit.amplitude)},
                   {"f_correlation", format_double(fit.correlation)}});
  log << "infer: eta " << res.eta_hat << ", alpha " << res.alpha_hat << " (fwhm " << res.alpha_fwhm << ") -> "
      << out_dir << '\n';
  return exit_ok;
}

RoundtripReport roundtrip(const RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  const std::string data_dir = join(out_dir, "data");
  const std::string inference_dir = join(out_dir, "inference");
  const std::string g_path = join(out_dir, "g_table.csv");

  simulate_to(cfg, data_dir, log);
  const Snapshot I0 = read_snapshot(join(data_dir, plane_name("intensity", 0)));
  measure_g_to(cfg, I0.field().max(), g_path, log);

  RoundtripReport rep;
  rep.eta_true = cfg.model.eta;
  rep.alpha_true = cfg.model.alpha;
  const std::array<std::string, 3> triple = {join(data_dir, plane_name("intensity", 0)),
                                             join(data_dir, plane_name("intensity", 2)),
                                             join(data_dir, plane_name("intensity", 4))};
  rep.exit_code = infer_files(triple, g_path, cfg.relax, inference_dir, log);

  if (rep.exit_code == exit_ok) {
    std::map<std::string, double> est;
    for (const auto& [k, v] : read_estimates(join(inference_dir, "estimates.txt")))
      if (k != "status" && k.rfind("converged_", 0) != 0) est[k] = std::stod(v);
    rep.eta_hat = est["eta_hat"];
    rep.alpha_hat = est["alpha_hat"];
    rep.alpha_fwhm = est["alpha_fwhm"];
    rep.f_offset = est["f_offset"];
    rep.f_amplitude = est["f_amplitude"];
    rep.f_correlation = est["f_correlation"];

    ScalarField2D exact = read_snapshot(join(data_dir, plane_name("phase", 0))).field();
    exact += read_snapshot(join(data_dir, plane_name("phase", 2))).field();
    exact *= 0.5;
    const ScalarField2D retrieved = read_snapshot(join(inference_dir, "phase_z1.tdcgl")).field();
    rep.sigma_phi = rms_phase_error(exact, retrieved);
    rep.sigma_grad = rms_phase_gradient_error(exact, retrieved);

    const Thresholds& th = cfg.thresholds;
    rep.eta_ok = std::abs(rep.eta_hat - rep.eta_true) <= th.eta_rel * std::abs(rep.eta_true);
    rep.alpha_ok = std::abs(rep.alpha_hat - rep.alpha_true) <= th.alpha_rel * std::abs(rep.alpha_true);
    rep.phase_ok = rep.sigma_phi < th.sigma_phi && rep.sigma_grad < th.sigma_grad;
    if (cfg.model.f.kind() == NonlinearFn::Kind::sine_scaled && cfg.model.f.amplitude() != 0.0) {
      const double a = cfg.model.f.amplitude();
      rep.f_checked = true;
      rep.f_ok = std::abs(rep.f_amplitude - a) <= th.f_amplitude_rel * std::abs(a) &&
                 rep.f_correlation * (a > 0 ? 1.0 : -1.0) > th.f_correlation;
    } else {
      rep.f_ok = true;
    }
    if (!rep.passed()) rep.exit_code = exit_threshold;
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ofstream out(join(out_dir, "report.txt"), std::ios::trunc);
  if (!out) throw FormatError("cannot write report in " + out_dir);
  out << format_report(rep);
  return rep;
}

std::string format_report(const RoundtripReport& r) {
  std::ostringstream s;
  auto verdict = [](bool ok) { return ok ? "pass" : "FAIL"; };
  if (r.exit_code == exit_nonconvergence) {
    s << "status = non-converged\n";
    s << "seconds = " << r.seconds << '\n';
    return s.str();
  }
  s << "status = " << (r.passed() ? "pass" : "fail") << '\n';
  s << "eta_hat = " << format_double(r.eta_hat) << "  rel_error = " << std::abs(r.eta_hat - r.eta_true) / r.eta_true
    << "  " << verdict(r.eta_ok) << '\n';
  s << "alpha_hat = " << format_double(r.alpha_hat) << "  fwhm = " << r.alpha_fwhm
    << "  rel_error = " << std::abs(r.alpha_hat - r.alpha_true) / r.alpha_true << "  " << verdict(r.alpha_ok) << '\n';
  s << "sigma_phi = " << r.sigma_phi << "  sigma_grad_phi = " << r.sigma_grad << "  " << verdict(r.phase_ok) << '\n';
  s << "f_fit = " << r.f_offset << " + " << r.f_amplitude << " sin(pi I)  correlation = " << r.f_correlation << "  "
    << (r.f_checked ? verdict(r.f_ok) : "not checked") << '\n';
  s << "seconds = " << r.seconds << '\n';
  return s.str();
}

std::vector<SweepRow> sweep_retrieval(const RunConfig& cfg, const std::vector<double>& a_phi,
                                      const std::string& out_dir, std::ostream& log) {
  cfg.validate();
  ensure_dir(out_dir);
  const GridSpec grid = GridSpec::square(cfg.grid_n);
  std::vector<SweepRow> rows;
  std::ofstream out(join(out_dir, "convergence_map.csv"), std::ios::trunc);
  if (!out) throw FormatError("cannot write convergence map in " + out_dir);
  out << "A_phi,mean_grad_phi,status,iterations,sigma_phi,sigma_grad_phi\n";
  for (double a : a_phi) {
    InitialConditionSpec ic = cfg.ic;
    ic.A_phi = a;
    const EvolutionResult ev = evolve(initial_field(ic, grid), cfg.model, cfg.plan);
    const IntensityTriple tr = ev.triple();
    PhaseRetrievalConfig rc;
    rc.eta_over_alpha = cfg.model.eta / cfg.model.alpha;
    rc.eta_alpha_product = cfg.model.eta * cfg.model.alpha;
    rc.g_over_alpha = sampled_g_over_alpha(cfg.model, 1.05 * tr.I0.max());
    rc.max_iters = cfg.relax.retrieval_max_iters;
    rc.grad_norm_tol = cfg.relax.grad_norm_tol;
    const RetrievedPhase r = retrieve_phase(tr.mid_intensity(1), tr.mid_dIdz(1), rc);

    SweepRow row;
    row.A_phi = a;
    row.mean_grad_phi = mean_gradient_magnitude(init_phase(ic, grid));
    row.status = to_string(r.status);
    row.iterations = r.iterations_used;
    ScalarField2D exact = ev.phase[0];
    exact += ev.phase[1];
    exact *= 0.5;
    const ScalarField2D phi = cfg.model.alpha * 0.5 * r.phi_tilde;
    row.sigma_phi = rms_phase_error(exact, phi);
    row.sigma_grad = rms_phase_gradient_error(exact, phi);
    out << format_double(row.A_phi) << ',' << format_double(row.mean_grad_phi) << ',' << row.status << ','
        << row.iterations << ',' << format_double(row.sigma_phi) << ',' << format_double(row.sigma_grad) << '\n';
    log << "sweep: A_phi " << a << " " << row.status << " after " << row.iterations << " iterations\n";
    rows.push_back(row);
  }
  return rows;
}

std::vector<RoundtripReport> sweep_roundtrip(const RunConfig& cfg, const std::vector<double>& a_phi,
                                             const std::string& out_dir, std::ostream& log) {
  ensure_dir(out_dir);
  std::vector<RoundtripReport> reports;
  std::ofstream out(join(out_dir, "roundtrip_map.csv"), std::ios::trunc);
  if (!out) throw FormatError("cannot write roundtrip map in " + out_dir);
  out << "A_phi,exit_code,eta_hat,alpha_hat,sigma_phi,sigma_grad_phi\n";
  for (std::size_t k = 0; k < a_phi.size(); ++k) {
    RunConfig c = cfg;
    c.ic.A_phi = a_phi[k];
    const std::string dir = join(out_dir, "run_" + std::to_string(k));
    RoundtripReport r;
    r.exit_code = run_guarded(
        [&] {
          r = roundtrip(c, dir, log);
          return r.exit_code;
        },
        log);
    out << format_double(a_phi[k]) << ',' << r.exit_code << ',' << format_double(r.eta_hat) << ','
        << format_double(r.alpha_hat) << ',' << format_double(r.sigma_phi) << ',' << format_double(r.sigma_grad)
        << '\n';
    reports.push_back(r);
  }
  return reports;
}

}  // namespace tdcgl
