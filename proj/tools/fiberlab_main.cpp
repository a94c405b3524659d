#include <CLI11.hpp>
#include <iostream>

#include "fiberlab/run.hpp"

namespace {

void add_common_options(CLI::App* cmd, fiberlab::RunConfig& cfg) {
  cmd->add_option("--potential", cfg.potential, "potential family: quadratic, power, tabulated");
  cmd->add_option("--beta", cfg.beta, "power-law exponent (>= 1/2)");
  cmd->add_option("--potential_file", cfg.potential_file, "tabulated potential file (x1 x2 V)");
  cmd->add_option("--A", cfg.A, "noise amplitude (diffusivity D = A^2/2)");
  cmd->add_option("--kappa", cfg.kappa, "belt speed in [0,1]");
  cmd->add_option("--nx", cfg.nx, "spatial cells in x");
  cmd->add_option("--ny", cfg.ny, "spatial cells in y");
  cmd->add_option("--nalpha", cfg.nalpha, "angle cells (even, >= 4)");
  cmd->add_option("--box", cfg.box, "half-width of the spatial box");
  cmd->add_option("--t_final", cfg.t_final, "time horizon");
  cmd->add_option("--dt", cfg.dt, "time step (0 = automatic)");
  cmd->add_option("--samples", cfg.samples, "number of recorded sample times");
  cmd->add_option("--particles", cfg.particles, "ensemble size");
  cmd->add_option("--seed", cfg.seed, "master RNG seed");
  cmd->add_option("--diag_nx", cfg.diag_nx, "diagnostic histogram cells in x");
  cmd->add_option("--diag_ny", cfg.diag_ny, "diagnostic histogram cells in y");
  cmd->add_option("--diag_nalpha", cfg.diag_nalpha, "diagnostic histogram angle cells");
  cmd->add_option("--init", cfg.init, "initial condition: gaussian, uniform, point");
  cmd->add_option("--init_x", cfg.init_x, "initial x center");
  cmd->add_option("--init_y", cfg.init_y, "initial y center");
  cmd->add_option("--init_alpha", cfg.init_alpha, "initial angle (point mass)");
  cmd->add_option("--init_sigma", cfg.init_sigma, "gaussian width");
  cmd->add_option("--init_half_width", cfg.init_half_width, "uniform box half-width");
  cmd->add_flag("--dump_ensemble", cfg.dump_ensemble, "write the final ensemble (binary)");
  cmd->add_option("--scheme", cfg.scheme, "fp scheme: positivity or structure");
  cmd->add_option("--eps", cfg.eps, "modified-entropy weight (adds a CSV column)");
  cmd->add_flag("--dump_fields", cfg.dump_fields, "write initial/final fields (binary)");
  cmd->add_option("--eta", cfg.eta, "safety factor of the theoretical rate");
  cmd->add_option("--trials", cfg.trials, "random trial fields for the verifications");
  cmd->add_option("--gap_resolution", cfg.gap_resolution, "grid for the spectral-gap estimate");
  cmd->add_option("--hyp_box", cfg.hyp_box, "sample box for hypothesis checks");
  cmd->add_option("--hyp_resolution", cfg.hyp_resolution, "grid for hypothesis checks");
  cmd->add_option("--backend", cfg.backend, "sweep backend: fp or sde");
  cmd->add_option("--amplitudes", cfg.amplitudes, "comma-separated A values for the sweep");
  cmd->add_option("--sweep_t_max", cfg.sweep_t_max, "per-row time cap for the sweep");
  cmd->add_option("--sweep_log_drop", cfg.sweep_log_drop, "early-stop drop of log|f-F|^2");
  cmd->add_option("--sweep_nx", cfg.sweep_nx, "sweep grid cells in x");
  cmd->add_option("--sweep_ny", cfg.sweep_ny, "sweep grid cells in y");
  cmd->add_option("--sweep_nalpha", cfg.sweep_nalpha, "sweep grid angle cells");
  cmd->add_option("--out", cfg.out_dir, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fiber lay-down kinetic laboratory: particle simulation, Fokker-Planck solver, "
               "and convergence-rate diagnostics"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from a config/manifest file");
  app.allow_config_extras(CLI::config_extras_mode::error);

  fiberlab::RunConfig cfg;
  const char* names[] = {"simulate-sde", "solve-fp", "diagnose", "sweep", "verify-hypotheses"};
  const char* blurbs[] = {
      "Euler-Maruyama particle simulation with distance-to-equilibrium series",
      "deterministic Fokker-Planck solve with entropy diagnostics",
      "coercivity/boundedness verification and the theoretical rate chain",
      "decay-rate sweep over noise amplitudes",
      "check the confining-potential hypotheses",
  };
  for (int i = 0; i < 5; ++i) add_common_options(app.add_subcommand(names[i], blurbs[i]), cfg);

  CLI11_PARSE(app, argc, argv);

  try {
    for (const char* name : names)
      if (app.got_subcommand(name)) return fiberlab::run_subcommand(name, cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
