#include <CLI11.hpp>

#include <cmath>
#include <iostream>

#include "tdcgl/commands.hpp"
#include "tdcgl/run_config.hpp"
#include "tdcgl/snapshot_io.hpp"

using namespace tdcgl;

namespace {

RunConfig config_or_default(const std::string& path) { return path.empty() ? RunConfig{} : load_run_config(path); }

std::vector<double> a_phi_grid(double lo, double hi, double step) {
  std::vector<double> out;
  const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
  for (int k = 0; k <= n; ++k) out.push_back(lo + k * step);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulate TDCGL propagation and infer its coefficients from intensity planes"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;

  auto* defaults = app.add_subcommand("default-config", "Print the default configuration");

  auto* simulate = app.add_subcommand("simulate", "Evolve the configured initial field and write snapshots");
  simulate->add_option("-c,--config", config_path, "Config file (defaults if omitted)");
  simulate->add_option("-o,--out", out, "Output directory")->required();

  std::vector<std::string> intensity;
  std::string g_table = "zero";
  auto* infer = app.add_subcommand("infer", "Estimate eta, alpha and f(I) from three intensity planes");
  infer->add_option("-i,--intensity", intensity, "Intensity snapshots at z0, z2, z4")->required()->expected(3);
  infer->add_option("-g,--g-table", g_table, "CSV of I,g_over_alpha or \"zero\"");
  infer->add_option("-c,--config", config_path, "Config file; only relax.* keys are used");
  infer->add_option("-o,--out", out, "Output directory")->required();

  auto* roundtrip_cmd = app.add_subcommand("roundtrip", "simulate, measure g, infer and compare with ground truth");
  roundtrip_cmd->add_option("-c,--config", config_path, "Config file (defaults if omitted)");
  roundtrip_cmd->add_option("-o,--out", out, "Output directory")->required();

  double lo = 0.0, hi = 2.0, step = 0.1;
  std::string mode = "retrieval";
  auto* sweep = app.add_subcommand("sweep", "Convergence map over the phase amplitude A_phi");
  sweep->add_option("-c,--config", config_path, "Config file (defaults if omitted)");
  sweep->add_option("-o,--out", out, "Output directory")->required();
  sweep->add_option("--from", lo, "First A_phi")->capture_default_str();
  sweep->add_option("--to", hi, "Last A_phi")->capture_default_str();
  sweep->add_option("--step", step, "A_phi increment")->capture_default_str()->check(CLI::PositiveNumber);
  sweep->add_option("--mode", mode, "retrieval (true coefficients) or roundtrip (full inference)")
      ->check(CLI::IsMember({"retrieval", "roundtrip"}))
      ->capture_default_str();

  double i_max = 0.0;
  auto* measure = app.add_subcommand("measure-g", "Plane-wave dissipation table g(I)/alpha");
  measure->add_option("-c,--config", config_path, "Config file (defaults if omitted)");
  measure->add_option("--i-max", i_max, "Largest intensity to cover (before headroom)")
      ->required()
      ->check(CLI::PositiveNumber);
  measure->add_option("-o,--out", out, "Output CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  return run_guarded(
      [&]() -> int {
        if (*defaults) {
          std::cout << serialize(RunConfig{});
          return exit_ok;
        }
        if (*simulate) {
          simulate_to(config_or_default(config_path), out, std::cerr);
          return exit_ok;
        }
        if (*infer) {
          const RunConfig cfg = config_or_default(config_path);
          return infer_files({intensity[0], intensity[1], intensity[2]}, g_table, cfg.relax, out, std::cerr);
        }
        if (*roundtrip_cmd) {
          const RoundtripReport r = roundtrip(config_or_default(config_path), out, std::cerr);
          std::cout << format_report(r);
          return r.exit_code;
        }
        if (*sweep) {
          const RunConfig cfg = config_or_default(config_path);
          const std::vector<double> grid = a_phi_grid(lo, hi, step);
          if (mode == "retrieval")
            sweep_retrieval(cfg, grid, out, std::cerr);
          else
            sweep_roundtrip(cfg, grid, out, std::cerr);
          return exit_ok;
        }
        if (*measure) {
          measure_g_to(config_or_default(config_path), i_max, out, std::cerr);
          return exit_ok;
        }
        return exit_format;
      },
      std::cerr);
}
