#include "fiberlab/sde.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "fiberlab/rng.hpp"
#include "fiberlab/util.hpp"

namespace fiberlab {

namespace {

// Counter space layout: dynamics use step indices 0, 1, 2, ...; draws needed
// to build the initial state live at 2^63 + q, far beyond any reachable step.
constexpr std::uint64_t init_counter_base = (std::uint64_t{1} << 63);

}  // namespace

ParticleEnsemble::ParticleEnsemble(std::size_t n, const InitSpec& init, std::uint64_t seed) {
  if (n < 1) throw SdeError("ensemble needs at least one particle");
  seed_ = seed;
  x1_.resize(n);
  x2_.resize(n);
  alpha_.resize(n);

  switch (init.kind) {
    case InitSpec::Kind::PointMass: {
      double a = wrap_angle(init.alpha0);
      std::fill(x1_.begin(), x1_.end(), init.x0.x);
      std::fill(x2_.begin(), x2_.end(), init.x0.y);
      std::fill(alpha_.begin(), alpha_.end(), a);
      break;
    }
    case InitSpec::Kind::UniformBox: {
      if (!(init.half_width > 0.0)) throw SdeError("uniform init: half-width must be positive");
      for (std::size_t p = 0; p < n; ++p) {
        auto [u1, u2] = counter_uniform2(seed_, init_counter_base, p);
        auto [u3, u4] = counter_uniform2(seed_, init_counter_base + 1, p);
        x1_[p] = init.half_width * (2.0 * u1 - 1.0);
        x2_[p] = init.half_width * (2.0 * u2 - 1.0);
        alpha_[p] = wrap_angle(two_pi * u3);
        (void)u4;
      }
      break;
    }
    case InitSpec::Kind::GaussianIso: {
      if (!(init.sigma > 0.0)) throw SdeError("gaussian init: sigma must be positive");
      for (std::size_t p = 0; p < n; ++p) {
        auto [n1, n2] = counter_normal2(seed_, init_counter_base, p);
        auto [u1, u2] = counter_uniform2(seed_, init_counter_base + 1, p);
        x1_[p] = init.x0.x + init.sigma * n1;
        x2_[p] = init.x0.y + init.sigma * n2;
        alpha_[p] = wrap_angle(two_pi * u1);
        (void)u2;
      }
      break;
    }
  }
}

void ParticleEnsemble::em_step(const ModelParams& params, const Potential& potential, double dt) {
  if (!(dt > 0.0)) throw SdeError("em_step: dt must be positive");
  params.validate();
  const double noise = params.A * std::sqrt(dt);
  const std::uint64_t key = seed_;
  const std::uint64_t step = step_;
  const std::size_t n = x1_.size();

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ip = 0; ip < static_cast<std::ptrdiff_t>(n); ++ip) {
    std::size_t p = static_cast<std::size_t>(ip);
    double a = alpha_[p];
    Vec2 grad = potential.grad({x1_[p], x2_[p]});
    double drift = -tangent_perp(a).dot(grad);
    double xi = counter_normal(key, step, p);
    Vec2 tan = tangent(a);
    x1_[p] += (tan.x + params.kappa) * dt;
    x2_[p] += tan.y * dt;
    alpha_[p] = wrap_angle(a + drift * dt + noise * xi);
  }
  ++step_;
  time_ += dt;
}

void ParticleEnsemble::dump(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SdeError("cannot open ensemble dump file: " + path);
  const char magic[4] = {'S', 'D', 'E', '1'};
  out.write(magic, 4);
  std::uint64_t n = x1_.size();
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(&time_), sizeof time_);
  out.write(reinterpret_cast<const char*>(&seed_), sizeof seed_);
  for (std::size_t p = 0; p < x1_.size(); ++p) {
    double rec[3] = {x1_[p], x2_[p], alpha_[p]};
    out.write(reinterpret_cast<const char*>(rec), sizeof rec);
  }
  if (!out) throw SdeError("failed while writing ensemble dump: " + path);
}

ParticleEnsemble ParticleEnsemble::restore(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SdeError("cannot open ensemble dump file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "SDE1", 4) != 0)
    throw SdeError("not an ensemble dump file: " + path);
  ParticleEnsemble e;
  std::uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  in.read(reinterpret_cast<char*>(&e.time_), sizeof e.time_);
  in.read(reinterpret_cast<char*>(&e.seed_), sizeof e.seed_);
  e.x1_.resize(n);
  e.x2_.resize(n);
  e.alpha_.resize(n);
  for (std::uint64_t p = 0; p < n; ++p) {
    double rec[3];
    in.read(reinterpret_cast<char*>(rec), sizeof rec);
    e.x1_[p] = rec[0];
    e.x2_[p] = rec[1];
    e.alpha_[p] = rec[2];
  }
  if (!in) throw SdeError("truncated ensemble dump: " + path);
  return e;
}

DensityEstimate estimate_density(const ParticleEnsemble& ensemble, const GridSpec& grid) {
  grid.validate();
  if (ensemble.size() == 0) throw SdeError("cannot estimate a density from an empty ensemble");
  DensityEstimate est;
  est.density = PhaseField(grid);
  est.density.time = ensemble.time();
  est.sample_count = ensemble.size();

  std::vector<std::uint64_t> counts(grid.size(), 0);
  std::uint64_t escaped = 0;
  auto x1 = ensemble.x1();
  auto x2 = ensemble.x2();
  auto al = ensemble.alpha();
  for (std::size_t p = 0; p < ensemble.size(); ++p) {
    double xi = (x1[p] + grid.box) / grid.hx();
    double yj = (x2[p] + grid.box) / grid.hy();
    if (xi < 0.0 || yj < 0.0 || xi >= grid.nx || yj >= grid.ny) {
      ++escaped;
      continue;
    }
    int i = static_cast<int>(xi);
    int j = static_cast<int>(yj);
    int k = static_cast<int>(wrap_angle(al[p]) / grid.halpha());
    if (k >= grid.nalpha) k = grid.nalpha - 1;  // guard against rounding at 2*pi
    ++counts[grid.idx(i, j, k)];
  }
  const double scale = 1.0 / (static_cast<double>(ensemble.size()) * grid.cell_measure());
  for (std::size_t c = 0; c < counts.size(); ++c)
    est.density.v[c] = static_cast<double>(counts[c]) * scale;
  est.escaped_fraction = static_cast<double>(escaped) / static_cast<double>(ensemble.size());
  return est;
}

MacroField spatial_density(const DensityEstimate& estimate) {
  const GridSpec& g = estimate.density.grid;
  MacroField rho(g.spatial());
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      double acc = 0.0;
      for (int k = 0; k < g.nalpha; ++k) acc += estimate.density.at(i, j, k);
      rho.at(i, j) = acc / g.nalpha;
    }
  return rho;
}

WeightedDistance weighted_l2_distance(const DensityEstimate& estimate, const Potential& potential,
                                      double cutoff) {
  const GridSpec& g = estimate.density.grid;
  KahanSum sum;
  KahanSum excluded;
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      double F = potential.equilibrium({g.x(i), g.y(j)});
      for (int k = 0; k < g.nalpha; ++k) {
        double f = estimate.density.at(i, j, k);
        if (F < cutoff) {
          excluded.add(f);
          continue;
        }
        double d = f - F;
        sum.add(d * d / F);
      }
    }
  WeightedDistance out;
  out.value = std::sqrt(std::max(0.0, sum.value() * g.cell_measure()));
  out.excluded_mass = excluded.value() * g.cell_measure();
  return out;
}

SdeSeries simulate(ParticleEnsemble& ensemble, const ModelParams& params,
                   const Potential& potential, double t_final, double dt,
                   const std::vector<double>& sample_times, const GridSpec& diagnostic_grid) {
  params.validate();
  if (t_final < 0.0) throw SdeError("t_final must be >= 0");

  long n_steps = 0;
  if (t_final > 0.0) {
    if (!(dt > 0.0)) throw SdeError("time step must be positive");
    n_steps = static_cast<long>(std::ceil(t_final / dt - 1e-12));
    dt = t_final / static_cast<double>(n_steps);
  }
  std::vector<char> sample_at(static_cast<std::size_t>(n_steps) + 1, 0);
  sample_at.front() = 1;
  sample_at.back() = 1;
  for (double ts : sample_times) {
    if (ts < -1e-12 || ts > t_final * (1.0 + 1e-12))
      throw SdeError("sample time outside [0, t_final]");
    long idx = (dt > 0.0) ? std::lround(ts / dt) : 0;
    idx = std::clamp<long>(idx, 0, n_steps);
    sample_at[static_cast<std::size_t>(idx)] = 1;
  }

  SdeSeries series;
  series.dt = dt;
  auto record = [&](double t) {
    DensityEstimate est = estimate_density(ensemble, diagnostic_grid);
    WeightedDistance d = weighted_l2_distance(est, potential);
    SdeSample s;
    s.t = t;
    s.l2_dist = d.value;
    s.log_l2_sq = std::log(std::max(d.value * d.value, 1e-300));
    s.escaped_fraction = est.escaped_fraction;
    series.samples.push_back(s);
  };

  record(0.0);
  for (long step = 1; step <= n_steps; ++step) {
    ensemble.em_step(params, potential, dt);
    if (sample_at[static_cast<std::size_t>(step)]) record(static_cast<double>(step) * dt);
  }
  return series;
}

}  // namespace fiberlab
