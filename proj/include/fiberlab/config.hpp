#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "fiberlab/grid.hpp"
#include "fiberlab/model.hpp"
#include "fiberlab/sde.hpp"

namespace fiberlab {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One configuration struct shared by all subcommands. Validation is
// subcommand-aware: the hypocoercivity diagnostics and the deterministic
// solver refuse a moving belt.
struct RunConfig {
  // model
  std::string potential = "quadratic";  // quadratic | power | tabulated
  double beta = 1.0;
  std::string potential_file;
  double A = 3.0;
  double kappa = 0.0;

  // phase-space grid
  int nx = 64;
  int ny = 64;
  int nalpha = 32;
  double box = 6.0;

  // time marching
  double t_final = 8.0;
  double dt = 0.0;  // 0 = derive from the scheme's admissible step
  int samples = 200;

  // particles
  std::uint64_t particles = 100000;
  std::uint64_t seed = 12345;
  int diag_nx = 32;
  int diag_ny = 32;
  int diag_nalpha = 16;
  std::string init = "gaussian";  // gaussian | uniform | point
  double init_x = 1.0;
  double init_y = 0.5;
  double init_alpha = 0.0;
  double init_sigma = 0.75;
  double init_half_width = 1.0;
  bool dump_ensemble = false;

  // deterministic solver
  std::string scheme = "positivity";  // positivity | structure
  double eps = 0.0;                   // modified-entropy weight (0 = column omitted)
  bool dump_fields = false;

  // theory
  double eta = 1.0;
  int trials = 100;
  int gap_resolution = 128;

  // hypothesis verification
  double hyp_box = 8.0;
  int hyp_resolution = 256;

  // sweep
  std::string backend = "fp";  // fp | sde
  std::string amplitudes = "0.25,0.5,1,2,3,4,6,8";
  double sweep_t_max = 250.0;
  double sweep_log_drop = 9.0;
  int sweep_nx = 48;
  int sweep_ny = 48;
  int sweep_nalpha = 24;

  std::string out_dir = "out";

  Potential make_potential() const;
  GridSpec make_grid() const;
  GridSpec make_diag_grid() const;
  InitSpec make_init() const;
  ModelParams make_params() const;
  // throws ConfigError naming the offending field
  void validate(const std::string& subcommand) const;
};

std::vector<double> parse_amplitude_list(const std::string& csv);

}  // namespace fiberlab
