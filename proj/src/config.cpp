#include "fiberlab/config.hpp"

#include <sstream>

namespace fiberlab {

Potential RunConfig::make_potential() const {
  if (potential == "quadratic") return Potential::quadratic();
  if (potential == "power") return Potential::power_law(beta);
  if (potential == "tabulated") {
    if (potential_file.empty())
      throw ConfigError("potential_file: required when potential = tabulated");
    return Potential::tabulated_from_file(potential_file);
  }
  throw ConfigError("potential: unknown family '" + potential +
                    "' (expected quadratic, power or tabulated)");
}

GridSpec RunConfig::make_grid() const {
  GridSpec g{nx, ny, nalpha, box};
  g.validate();
  return g;
}

GridSpec RunConfig::make_diag_grid() const {
  GridSpec g{diag_nx, diag_ny, diag_nalpha, box};
  g.validate();
  return g;
}

InitSpec RunConfig::make_init() const {
  InitSpec spec;
  spec.x0 = {init_x, init_y};
  spec.alpha0 = init_alpha;
  spec.sigma = init_sigma;
  spec.half_width = init_half_width;
  if (init == "gaussian")
    spec.kind = InitSpec::Kind::GaussianIso;
  else if (init == "uniform")
    spec.kind = InitSpec::Kind::UniformBox;
  else if (init == "point")
    spec.kind = InitSpec::Kind::PointMass;
  else
    throw ConfigError("init: unknown distribution '" + init +
                      "' (expected gaussian, uniform or point)");
  return spec;
}

ModelParams RunConfig::make_params() const { return ModelParams{A, kappa}; }

void RunConfig::validate(const std::string& subcommand) const {
  if (!(A >= 0.0)) throw ConfigError("A: noise amplitude must be >= 0");
  if (!(kappa >= 0.0 && kappa <= 1.0)) throw ConfigError("kappa: belt speed must lie in [0,1]");
  const bool needs_theory =
      subcommand == "diagnose" || subcommand == "sweep" || subcommand == "solve-fp";
  if (needs_theory && kappa != 0.0)
    throw ConfigError("kappa: " + subcommand +
                      " compares against the convergence theory, which assumes a "
                      "non-moving belt (kappa = 0); rerun with kappa = 0 or use simulate-sde");
  if (!(t_final >= 0.0)) throw ConfigError("t_final: must be >= 0");
  if (dt < 0.0) throw ConfigError("dt: must be >= 0 (0 selects the admissible step)");
  if (samples < 1) throw ConfigError("samples: must be >= 1");
  if (particles < 1) throw ConfigError("particles: must be >= 1");
  if (trials < 1) throw ConfigError("trials: must be >= 1");
  if (gap_resolution < 16) throw ConfigError("gap_resolution: must be >= 16");
  if (hyp_resolution < 8) throw ConfigError("hyp_resolution: must be >= 8");
  if (!(hyp_box > 0.0)) throw ConfigError("hyp_box: must be > 0");
  if (!(eta > 0.0)) throw ConfigError("eta: must be > 0");
  if (eps < 0.0 || eps >= 1.0) throw ConfigError("eps: must lie in [0,1)");
  if (scheme != "positivity" && scheme != "structure")
    throw ConfigError("scheme: expected 'positivity' or 'structure'");
  if (backend != "fp" && backend != "sde") throw ConfigError("backend: expected 'fp' or 'sde'");
  if (potential == "power" && !(beta >= 0.5)) throw ConfigError("beta: must be >= 1/2");
  make_grid();
  make_diag_grid();
  GridSpec sweep_grid{sweep_nx, sweep_ny, sweep_nalpha, box};
  sweep_grid.validate();
  make_init();
  if (subcommand == "sweep") parse_amplitude_list(amplitudes);
}

std::vector<double> parse_amplitude_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t pos = 0;
    double v = std::stod(item, &pos);
    if (pos != item.size()) throw ConfigError("amplitudes: cannot parse '" + item + "'");
    if (!(v > 0.0)) throw ConfigError("amplitudes: values must be positive");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("amplitudes: list is empty");
  return out;
}

}  // namespace fiberlab
