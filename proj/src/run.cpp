#include "fiberlab/run.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>

#include "fiberlab/fp_solver.hpp"
#include "fiberlab/io.hpp"
#include "fiberlab/rate.hpp"
#include "fiberlab/util.hpp"

namespace fiberlab {

namespace {

constexpr const char* version_string = "fiberlab 0.1.0";

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

std::vector<std::pair<std::string, std::string>> manifest_entries(const RunConfig& c) {
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  return {
      {"potential", quoted(c.potential)},
      {"beta", format_double(c.beta)},
      {"potential_file", quoted(c.potential_file)},
      {"A", format_double(c.A)},
      {"kappa", format_double(c.kappa)},
      {"nx", std::to_string(c.nx)},
      {"ny", std::to_string(c.ny)},
      {"nalpha", std::to_string(c.nalpha)},
      {"box", format_double(c.box)},
      {"t_final", format_double(c.t_final)},
      {"dt", format_double(c.dt)},
      {"samples", std::to_string(c.samples)},
      {"particles", std::to_string(c.particles)},
      {"seed", std::to_string(c.seed)},
      {"diag_nx", std::to_string(c.diag_nx)},
      {"diag_ny", std::to_string(c.diag_ny)},
      {"diag_nalpha", std::to_string(c.diag_nalpha)},
      {"init", quoted(c.init)},
      {"init_x", format_double(c.init_x)},
      {"init_y", format_double(c.init_y)},
      {"init_alpha", format_double(c.init_alpha)},
      {"init_sigma", format_double(c.init_sigma)},
      {"init_half_width", format_double(c.init_half_width)},
      {"dump_ensemble", b(c.dump_ensemble)},
      {"scheme", quoted(c.scheme)},
      {"eps", format_double(c.eps)},
      {"dump_fields", b(c.dump_fields)},
      {"eta", format_double(c.eta)},
      {"trials", std::to_string(c.trials)},
      {"gap_resolution", std::to_string(c.gap_resolution)},
      {"hyp_box", format_double(c.hyp_box)},
      {"hyp_resolution", std::to_string(c.hyp_resolution)},
      {"backend", quoted(c.backend)},
      {"amplitudes", quoted(c.amplitudes)},
      {"sweep_t_max", format_double(c.sweep_t_max)},
      {"sweep_log_drop", format_double(c.sweep_log_drop)},
      {"sweep_nx", std::to_string(c.sweep_nx)},
      {"sweep_ny", std::to_string(c.sweep_ny)},
      {"sweep_nalpha", std::to_string(c.sweep_nalpha)},
      {"out_dir", quoted(c.out_dir)},
  };
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

void write_run_manifest(const RunConfig& cfg, const std::string& subcommand) {
  std::string path = out_path(cfg, "manifest-" + subcommand + ".ini");
  auto entries = manifest_entries(cfg);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open manifest file: " + path);
  out << "# " << version_string << " reproducibility manifest\n";
  out << "# rerun: fiberlab " << subcommand << " --config " << path << "\n";
  out << '[' << subcommand << "]\n";
  for (const auto& [k, v] : entries) out << k << " = " << v << '\n';
  if (!out) throw IoError("failed while writing manifest: " + path);
}

PhaseField initial_field(const RunConfig& cfg, const GridSpec& grid) {
  InitSpec init = cfg.make_init();
  switch (init.kind) {
    case InitSpec::Kind::GaussianIso:
      return gaussian_alpha_uniform_field(grid, init.x0, init.sigma);
    case InitSpec::Kind::UniformBox:
      return uniform_box_field(grid, init.half_width);
    case InitSpec::Kind::PointMass:
      return point_mass_field(grid, init.x0, init.alpha0);
  }
  throw ConfigError("init: unknown kind");
}

FpScheme scheme_of(const RunConfig& cfg) {
  return cfg.scheme == "structure" ? FpScheme::StructurePreserving
                                   : FpScheme::PositivityPreserving;
}

}  // namespace

int run_simulate_sde(const RunConfig& cfg) {
  cfg.validate("simulate-sde");
  Potential potential = cfg.make_potential();
  ModelParams params = cfg.make_params();
  GridSpec diag = cfg.make_diag_grid();
  double dt = cfg.dt > 0.0 ? cfg.dt : 1e-3;

  ParticleEnsemble ensemble(cfg.particles, cfg.make_init(), cfg.seed);
  std::vector<double> sample_times = linspace(0.0, cfg.t_final, cfg.samples);
  SdeSeries series = simulate(ensemble, params, potential, cfg.t_final, dt, sample_times, diag);

  CsvWriter csv(out_path(cfg, "sde_series.csv"),
                {"t", "l2_dist", "l2_dist_sq_log", "escaped_mass_fraction"});
  for (const SdeSample& s : series.samples) {
    csv.cell(s.t);
    csv.cell(s.l2_dist);
    csv.cell(s.log_l2_sq);
    csv.cell(s.escaped_fraction);
    csv.end_row();
  }
  csv.close();
  if (cfg.dump_ensemble) ensemble.dump(out_path(cfg, "ensemble_final.bin"));
  write_run_manifest(cfg, "simulate-sde");
  std::cout << "simulate-sde: " << series.samples.size() << " samples, final |f-F| = "
            << format_double(series.samples.back().l2_dist) << "\n";
  return 0;
}

int run_solve_fp(const RunConfig& cfg) {
  cfg.validate("solve-fp");
  Potential potential = cfg.make_potential();
  GridSpec grid = cfg.make_grid();
  DiscreteOperators ops(potential, grid);
  if (ops.equilibrium_tail_mass() > 1e-8)
    std::cerr << "solve-fp: warning: equilibrium tail mass outside the box is "
              << format_double(ops.equilibrium_tail_mass()) << " (> 1e-8); enlarge box\n";

  FpOptions options;
  options.scheme = scheme_of(cfg);
  double dt = cfg.dt;
  if (dt <= 0.0)
    dt = options.scheme == FpScheme::StructurePreserving ? ops.admissible_dt_central()
                                                         : ops.admissible_dt_upwind();

  PhaseField f0 = initial_field(cfg, grid);
  match_equilibrium_mass(f0, ops);
  if (cfg.dump_fields) write_field(out_path(cfg, "field_initial.bin"), f0);

  Hypocoercivity hypo(ops);
  if (cfg.eps > 0.0) {
    PhaseField eq = ops.equilibrium_field();
    options.extra = [&hypo, eq, eps = cfg.eps](const PhaseField& f) {
      PhaseField g(f.grid);
      for (std::size_t i = 0; i < f.v.size(); ++i) g.v[i] = f.v[i] - eq.v[i];
      return hypo.modified_entropy(g, eps);
    };
  }

  std::vector<double> sample_times = linspace(0.0, cfg.t_final, cfg.samples);
  FpResult result =
      solve_fp(f0, ops, cfg.make_params().diffusivity(), cfg.t_final, dt, sample_times, options);

  std::vector<std::string> header = {"t", "half_norm_sq", "dissipation"};
  if (cfg.eps > 0.0) header.push_back("modified_entropy");
  header.push_back("mass");
  header.push_back("min_f");
  CsvWriter csv(out_path(cfg, "fp_series.csv"), header);
  for (const FpSample& s : result.series) {
    csv.cell(s.t);
    csv.cell(s.half_norm_sq);
    csv.cell(s.dissipation);
    if (cfg.eps > 0.0) csv.cell(s.extra.value_or(std::nan("")));
    csv.cell(s.mass);
    csv.cell(s.min_f);
    csv.end_row();
  }
  csv.close();
  if (cfg.dump_fields) write_field(out_path(cfg, "field_final.bin"), result.final_field);
  write_run_manifest(cfg, "solve-fp");
  std::cout << "solve-fp: dt = " << format_double(result.dt) << ", escaped mass = "
            << format_double(result.escaped_mass) << ", final half-norm^2 = "
            << format_double(result.series.back().half_norm_sq) << "\n";
  return 0;
}

int run_diagnose(const RunConfig& cfg) {
  cfg.validate("diagnose");
  Potential potential = cfg.make_potential();
  GridSpec grid = cfg.make_grid();
  DiscreteOperators ops(potential, grid);
  Hypocoercivity hypo(ops);

  IterationReport gap_report;
  SpatialGrid gap_grid{cfg.gap_resolution, cfg.gap_resolution, cfg.box};
  double lambda_gap = estimate_spectral_gap(potential, gap_grid, &gap_report);
  IterationReport cv_report;
  double c_v = hypo.estimate_cv(&cv_report);
  std::cout << "diagnose: spectral gap = " << format_double(lambda_gap) << " ("
            << gap_report.iterations << " iterations), C_V = " << format_double(c_v) << " ("
            << cv_report.iterations << " Lanczos steps)\n";

  auto rows = hypo.verify_coercivity(lambda_gap, c_v, cfg.trials, cfg.seed);
  CsvWriter csv(out_path(cfg, "coercivity_report.csv"),
                {"inequality", "bound", "worst_ratio", "trials"});
  bool all_pass = true;
  for (const auto& row : rows) {
    csv.cell(row.inequality);
    csv.cell(row.bound);
    csv.cell(row.worst_ratio);
    csv.cell(static_cast<long>(row.trials));
    csv.end_row();
    all_pass = all_pass && row.pass;
    std::cout << "  " << (row.pass ? "pass" : "FAIL") << "  " << row.inequality << "  worst "
              << format_double(row.worst_ratio) << " " << row.comparison << " bound "
              << format_double(row.bound) << "\n";
  }
  csv.close();

  std::vector<double> dgrid = logspace(-3.0, 3.0, 61);
  CsvWriter chain(out_path(cfg, "rate_chain.csv"),
                  {"D", "delta", "r", "s", "eps_bar", "eps", "lambda_theory"});
  for (double d : dgrid) {
    RateChain rc = theoretical_rate(lambda_gap, c_v, d, cfg.eta);
    chain.cell(rc.diffusivity);
    chain.cell(rc.delta);
    chain.cell(rc.r);
    chain.cell(rc.s);
    chain.cell(rc.eps_bar);
    chain.cell(rc.eps);
    chain.cell(rc.lambda);
    chain.end_row();
  }
  chain.close();
  write_run_manifest(cfg, "diagnose");
  return all_pass ? 0 : 1;
}

int run_sweep(const RunConfig& cfg) {
  cfg.validate("sweep");
  Potential potential = cfg.make_potential();
  std::vector<double> amplitudes = parse_amplitude_list(cfg.amplitudes);

  SpatialGrid gap_grid{cfg.gap_resolution, cfg.gap_resolution, cfg.box};
  double lambda_gap = estimate_spectral_gap(potential, gap_grid);

  GridSpec fp_grid{cfg.sweep_nx, cfg.sweep_ny, cfg.sweep_nalpha, cfg.box};
  DiscreteOperators ops(potential, fp_grid);
  Hypocoercivity hypo(ops);
  double c_v = hypo.estimate_cv();

  std::function<SweepSeries(double)> backend;
  if (cfg.backend == "fp") {
    backend = [&](double A) {
      FpOptions options;
      options.scheme = FpScheme::StructurePreserving;
      options.stop_after_log_drop = cfg.sweep_log_drop;
      double dt = ops.admissible_dt_central();
      PhaseField f0 = initial_field(cfg, fp_grid);
      match_equilibrium_mass(f0, ops);
      long n_steps = static_cast<long>(std::ceil(cfg.sweep_t_max / dt));
      long every = std::max<long>(1, n_steps / 600);
      std::vector<double> sample_times;
      for (long s = 0; s <= n_steps; s += every)
        sample_times.push_back(std::min(s * dt, cfg.sweep_t_max));
      FpResult res =
          solve_fp(f0, ops, 0.5 * A * A, cfg.sweep_t_max, dt, sample_times, options);
      SweepSeries series;
      for (const FpSample& s : res.series) {
        series.t.push_back(s.t);
        series.log_norm_sq.push_back(std::log(std::max(2.0 * s.half_norm_sq, 1e-300)));
      }
      return series;
    };
  } else {
    backend = [&](double A) {
      ModelParams params{A, 0.0};
      GridSpec diag = cfg.make_diag_grid();
      std::uint64_t row_seed = cfg.seed + static_cast<std::uint64_t>(std::llround(A * 1000.0));
      ParticleEnsemble ensemble(cfg.particles, cfg.make_init(), row_seed);
      double dt = cfg.dt > 0.0 ? cfg.dt : 1e-3;
      std::vector<double> sample_times = linspace(0.0, cfg.t_final, cfg.samples);
      SdeSeries s = simulate(ensemble, params, potential, cfg.t_final, dt, sample_times, diag);
      SweepSeries series;
      for (const SdeSample& smp : s.samples) {
        series.t.push_back(smp.t);
        series.log_norm_sq.push_back(smp.log_l2_sq);
      }
      return series;
    };
  }

  auto rows = sweep_amplitudes(amplitudes, backend, cfg.backend, lambda_gap, c_v, cfg.eta);
  CsvWriter csv(out_path(cfg, "lambda_sweep.csv"),
                {"A", "D", "lambda_fit", "lambda_theory", "r_squared", "window_lo", "window_hi",
                 "backend"});
  for (const auto& row : rows) {
    csv.cell(row.A);
    csv.cell(row.diffusivity);
    csv.cell(row.failed ? std::nan("") : row.lambda_fit);
    csv.cell(row.lambda_theory);
    csv.cell(row.r_squared);
    csv.cell(row.window_lo);
    csv.cell(row.window_hi);
    csv.cell(row.backend);
    csv.end_row();
    if (row.failed) std::cerr << "sweep: A = " << row.A << " failed: " << row.error << "\n";
  }
  csv.close();
  write_run_manifest(cfg, "sweep");
  std::cout << "sweep: " << rows.size() << " rows (gap = " << format_double(lambda_gap)
            << ", C_V = " << format_double(c_v) << ")\n";
  return 0;
}

int run_verify_hypotheses(const RunConfig& cfg) {
  cfg.validate("verify-hypotheses");
  Potential potential = cfg.make_potential();
  HypothesisReport rep = check_hypotheses(potential, cfg.hyp_box, cfg.hyp_resolution);

  CsvWriter csv(out_path(cfg, "hypotheses_report.csv"),
                {"mass", "h2_mass_error", "h2_pass", "mass_diverging", "h4_worst_ratio", "c1",
                 "h4_pass", "theta", "c0"});
  csv.cell(rep.mass);
  csv.cell(rep.h2_mass_error);
  csv.cell(std::string(rep.h2_pass ? "true" : "false"));
  csv.cell(std::string(rep.mass_diverging ? "true" : "false"));
  csv.cell(rep.h4_worst_ratio);
  csv.cell(rep.c1);
  csv.cell(std::string(rep.h4_pass ? "true" : "false"));
  csv.cell(rep.theta);
  csv.cell(rep.c0);
  csv.end_row();
  csv.close();
  write_run_manifest(cfg, "verify-hypotheses");

  std::cout << "verify-hypotheses: mass error = " << format_double(rep.h2_mass_error)
            << (rep.h2_pass ? " (pass)" : " (FAIL)") << ", worst Hessian ratio = "
            << format_double(rep.h4_worst_ratio) << " vs c1 = " << format_double(rep.c1)
            << (rep.h4_pass ? " (pass)" : " (FAIL)") << "\n";
  return (rep.h2_pass && rep.h4_pass) ? 0 : 1;
}

int run_subcommand(const std::string& name, const RunConfig& cfg) {
  if (name == "simulate-sde") return run_simulate_sde(cfg);
  if (name == "solve-fp") return run_solve_fp(cfg);
  if (name == "diagnose") return run_diagnose(cfg);
  if (name == "sweep") return run_sweep(cfg);
  if (name == "verify-hypotheses") return run_verify_hypotheses(cfg);
  throw ConfigError("unknown subcommand: " + name);
}

}  // namespace fiberlab
