#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fiberlab/grid.hpp"
#include "fiberlab/model.hpp"

namespace fiberlab {

struct SdeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InitSpec {
  enum class Kind { PointMass, UniformBox, GaussianIso };
  Kind kind = Kind::GaussianIso;
  Vec2 x0{1.0, 0.5};       // point-mass position / gaussian center
  double alpha0 = 0.0;     // point-mass angle
  double half_width = 1.0; // uniform box half-width
  double sigma = 0.75;     // gaussian std deviation
};

// Monte-Carlo ensemble for the lay-down process. Noise is drawn from
// counter-based streams keyed by (seed, particle, step), so trajectories are
// reproducible bit for bit regardless of scheduling.
class ParticleEnsemble {
 public:
  ParticleEnsemble(std::size_t n, const InitSpec& init, std::uint64_t seed);

  std::size_t size() const { return x1_.size(); }
  double time() const { return time_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t steps_taken() const { return step_; }

  std::span<const double> x1() const { return x1_; }
  std::span<const double> x2() const { return x2_; }
  std::span<const double> alpha() const { return alpha_; }

  // Explicit Euler-Maruyama step; drift and transport both evaluated at the
  // pre-step state. Angles are kept reduced to [0, 2*pi).
  void em_step(const ModelParams& params, const Potential& potential, double dt);

  // raw dump / restore (little-endian, fixed layout)
  void dump(const std::string& path) const;
  static ParticleEnsemble restore(const std::string& path);

 private:
  ParticleEnsemble() = default;

  std::vector<double> x1_, x2_, alpha_;
  std::uint64_t seed_ = 0;
  std::uint64_t step_ = 0;
  double time_ = 0.0;
};

struct DensityEstimate {
  PhaseField density;           // probability density w.r.t. dx d(alpha)/(2 pi)
  double escaped_fraction = 0.0;
  std::size_t sample_count = 0;
};

DensityEstimate estimate_density(const ParticleEnsemble& ensemble, const GridSpec& grid);

// angle-averaged spatial density rho(x) of the estimate
MacroField spatial_density(const DensityEstimate& estimate);

struct WeightedDistance {
  double value = 0.0;          // || f - F || in the equilibrium-weighted norm
  double excluded_mass = 0.0;  // mass in cells below the equilibrium cutoff
};

// Weighted L2 distance between a density estimate and the equilibrium.
// Cells where the equilibrium underflows (F < cutoff) are excluded and their
// mass reported instead of silently amplifying noise.
WeightedDistance weighted_l2_distance(const DensityEstimate& estimate, const Potential& potential,
                                      double cutoff = 1e-30);

struct SdeSample {
  double t = 0.0;
  double l2_dist = 0.0;
  double log_l2_sq = 0.0;
  double escaped_fraction = 0.0;
};

struct SdeSeries {
  std::vector<SdeSample> samples;
  double dt = 0.0;
};

// March the ensemble to t_final, recording the distance to equilibrium on the
// diagnostic grid at t=0, at each requested sample time (snapped to the step
// grid) and at the end.
SdeSeries simulate(ParticleEnsemble& ensemble, const ModelParams& params,
                   const Potential& potential, double t_final, double dt,
                   const std::vector<double>& sample_times, const GridSpec& diagnostic_grid);

}  // namespace fiberlab
