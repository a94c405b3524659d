#include "fiberlab/fp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fiberlab/util.hpp"

namespace fiberlab {

namespace {

void check_dt(double dt, double admissible, const char* scheme) {
  if (!(dt > 0.0)) throw FpError("time step must be positive");
  if (dt > admissible) {
    std::ostringstream os;
    os << scheme << ": dt = " << dt << " violates the admissible step " << admissible;
    throw FpError(os.str());
  }
}

// phi' = -T~ phi, classical RK4 on the symmetrized representation
void rk4_transport(PhaseField& phi, const DiscreteOperators& ops, double dt) {
  PhaseField k1 = ops.apply_transport_sym(phi);
  PhaseField stage(phi.grid);
  for (std::size_t n = 0; n < phi.v.size(); ++n) stage.v[n] = phi.v[n] - 0.5 * dt * k1.v[n];
  PhaseField k2 = ops.apply_transport_sym(stage);
  for (std::size_t n = 0; n < phi.v.size(); ++n) stage.v[n] = phi.v[n] - 0.5 * dt * k2.v[n];
  PhaseField k3 = ops.apply_transport_sym(stage);
  for (std::size_t n = 0; n < phi.v.size(); ++n) stage.v[n] = phi.v[n] - dt * k3.v[n];
  PhaseField k4 = ops.apply_transport_sym(stage);
  for (std::size_t n = 0; n < phi.v.size(); ++n)
    phi.v[n] -= dt / 6.0 * (k1.v[n] + 2.0 * k2.v[n] + 2.0 * k3.v[n] + k4.v[n]);
}

}  // namespace

double step_fp(PhaseField& f, const DiscreteOperators& ops, double diffusivity, double dt,
               FpScheme scheme, double cfl_safety) {
  if (scheme == FpScheme::StructurePreserving) {
    check_dt(dt, ops.admissible_dt_central(cfl_safety), "structure-preserving step");
    PhaseField phi = ops.to_symmetrized(f);
    ops.diffuse_spectral(phi, 0.5 * diffusivity * dt);
    rk4_transport(phi, ops, dt);
    ops.diffuse_spectral(phi, 0.5 * diffusivity * dt);
    f = ops.from_symmetrized(phi);
    f.time += dt;
    return 0.0;
  }
  check_dt(dt, ops.admissible_dt_upwind(cfl_safety), "upwind step");
  ops.diffuse_implicit(f, 0.5 * diffusivity * dt);
  double outflow = ops.upwind_transport_step(f, dt);
  ops.diffuse_implicit(f, 0.5 * diffusivity * dt);
  return outflow;
}

void rk4_unsplit_step(PhaseField& f, const DiscreteOperators& ops, double diffusivity, double dt) {
  PhaseField phi = ops.to_symmetrized(f);
  auto rhs = [&](const PhaseField& p) {
    PhaseField t = ops.apply_transport_sym(p);
    PhaseField l = ops.apply_collision(p);
    PhaseField out(p.grid);
    for (std::size_t n = 0; n < p.v.size(); ++n) out.v[n] = -t.v[n] + diffusivity * l.v[n];
    return out;
  };
  PhaseField k1 = rhs(phi);
  PhaseField stage(phi.grid);
  for (std::size_t n = 0; n < phi.v.size(); ++n) stage.v[n] = phi.v[n] + 0.5 * dt * k1.v[n];
  PhaseField k2 = rhs(stage);
  for (std::size_t n = 0; n < phi.v.size(); ++n) stage.v[n] = phi.v[n] + 0.5 * dt * k2.v[n];
  PhaseField k3 = rhs(stage);
  for (std::size_t n = 0; n < phi.v.size(); ++n) stage.v[n] = phi.v[n] + dt * k3.v[n];
  PhaseField k4 = rhs(stage);
  for (std::size_t n = 0; n < phi.v.size(); ++n)
    phi.v[n] += dt / 6.0 * (k1.v[n] + 2.0 * k2.v[n] + 2.0 * k3.v[n] + k4.v[n]);
  f = ops.from_symmetrized(phi);
  f.time += dt;
}

FpResult solve_fp(const PhaseField& f0, const DiscreteOperators& ops, double diffusivity,
                  double t_final, double dt, const std::vector<double>& sample_times,
                  const FpOptions& options) {
  require_same_grid(f0.grid, ops.grid());
  if (options.kappa != 0.0)
    throw FpError("the deterministic solver requires kappa = 0 (non-moving belt)");
  if (t_final < 0.0) throw FpError("t_final must be >= 0");

  FpResult result;
  PhaseField f = f0;
  PhaseField equilibrium = ops.equilibrium_field();

  long n_steps = 0;
  if (t_final > 0.0) {
    if (!(dt > 0.0)) throw FpError("time step must be positive");
    n_steps = static_cast<long>(std::ceil(t_final / dt - 1e-12));
    dt = t_final / static_cast<double>(n_steps);
  }
  result.dt = dt;

  // snap requested sample times onto the step grid
  std::vector<char> sample_at(static_cast<std::size_t>(n_steps) + 1, 0);
  sample_at.front() = 1;
  sample_at.back() = 1;
  for (double ts : sample_times) {
    if (ts < -1e-12 || ts > t_final * (1.0 + 1e-12))
      throw FpError("sample time outside [0, t_final]");
    long idx = (dt > 0.0) ? std::lround(ts / dt) : 0;
    idx = std::clamp<long>(idx, 0, n_steps);
    sample_at[static_cast<std::size_t>(idx)] = 1;
  }

  auto record = [&](const PhaseField& field) {
    FpSample s;
    s.t = field.time;
    PhaseField dev(field.grid);
    for (std::size_t n = 0; n < field.v.size(); ++n) dev.v[n] = field.v[n] - equilibrium.v[n];
    double nrm = ops.norm(dev);
    s.half_norm_sq = 0.5 * nrm * nrm;
    s.dissipation = diffusivity * ops.collision_dissipation(field);
    s.mass = ops.mass(field);
    s.min_f = *std::min_element(field.v.begin(), field.v.end());
    if (options.extra) s.extra = options.extra(field);
    result.series.push_back(s);
    if (options.keep_snapshots) result.snapshots.push_back(field);
    return s.half_norm_sq;
  };

  double first_log = 0.0;
  {
    double h = record(f);
    first_log = std::log(std::max(2.0 * h, 1e-300));
  }
  KahanSum escaped;
  for (long step = 1; step <= n_steps; ++step) {
    escaped.add(step_fp(f, ops, diffusivity, dt, options.scheme, options.cfl_safety));
    f.time = static_cast<double>(step) * dt;  // avoid accumulated rounding
    if (sample_at[static_cast<std::size_t>(step)]) {
      double h = record(f);
      if (options.stop_after_log_drop > 0.0 && step < n_steps) {
        double now_log = std::log(std::max(2.0 * h, 1e-300));
        if (first_log - now_log >= options.stop_after_log_drop) break;
      }
    }
  }
  result.escaped_mass = escaped.value();
  result.final_field = std::move(f);
  return result;
}

PhaseField gaussian_alpha_uniform_field(const GridSpec& grid, Vec2 center, double sigma) {
  if (!(sigma > 0.0)) throw FpError("gaussian init: sigma must be positive");
  PhaseField f(grid);
  const double norm = 1.0 / (two_pi * sigma * sigma);
  for (int i = 0; i < grid.nx; ++i)
    for (int j = 0; j < grid.ny; ++j) {
      double dx = grid.x(i) - center.x;
      double dy = grid.y(j) - center.y;
      double val = norm * std::exp(-0.5 * (dx * dx + dy * dy) / (sigma * sigma));
      for (int k = 0; k < grid.nalpha; ++k) f.at(i, j, k) = val;
    }
  return f;
}

PhaseField uniform_box_field(const GridSpec& grid, double half_width) {
  if (!(half_width > 0.0) || half_width > grid.box)
    throw FpError("uniform init: half-width must be in (0, box]");
  PhaseField f(grid);
  const double density = 1.0 / (4.0 * half_width * half_width);
  for (int i = 0; i < grid.nx; ++i)
    for (int j = 0; j < grid.ny; ++j) {
      if (std::abs(grid.x(i)) > half_width || std::abs(grid.y(j)) > half_width) continue;
      for (int k = 0; k < grid.nalpha; ++k) f.at(i, j, k) = density;
    }
  return f;
}

PhaseField point_mass_field(const GridSpec& grid, Vec2 x0, double alpha0) {
  PhaseField f(grid);
  int i = std::clamp(static_cast<int>((x0.x + grid.box) / grid.hx()), 0, grid.nx - 1);
  int j = std::clamp(static_cast<int>((x0.y + grid.box) / grid.hy()), 0, grid.ny - 1);
  int k = static_cast<int>(wrap_angle(alpha0) / grid.halpha()) % grid.nalpha;
  f.at(i, j, k) = 1.0 / grid.cell_measure();
  return f;
}

void match_equilibrium_mass(PhaseField& f, const DiscreteOperators& ops) {
  double mf = ops.mass(f);
  double me = ops.mass(ops.equilibrium_field());
  if (!(mf > 0.0)) throw FpError("cannot rescale a field with non-positive mass");
  double scale = me / mf;
  for (double& x : f.v) x *= scale;
}

}  // namespace fiberlab
