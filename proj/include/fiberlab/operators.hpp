#pragma once

#include <vector>

#include "fiberlab/grid.hpp"
#include "fiberlab/model.hpp"

namespace fiberlab {

// Dense operators on the periodic angle grid, built from the orthonormal
// trigonometric basis so that differentiation is exact on every resolved
// Fourier mode. `deriv` is exactly antisymmetric and `second` exactly
// symmetric by construction (mirrored assembly).
struct AngleOperators {
  int n = 0;
  std::vector<double> deriv;   // first derivative; Nyquist mode mapped to zero
  std::vector<double> second;  // second derivative; eigenvalues -k^2, Nyquist included
  std::vector<double> basis;   // column m = orthonormal mode vector
  std::vector<int> mode_k;     // wavenumber of column m

  double d(int r, int c) const { return deriv[static_cast<std::size_t>(r) * n + c]; }
  double s(int r, int c) const { return second[static_cast<std::size_t>(r) * n + c]; }
  double b(int r, int c) const { return basis[static_cast<std::size_t>(r) * n + c]; }
};

// Discretization of the kinetic transport/collision pair on the truncated
// phase-space box, in the inner product weighted by 1/equilibrium.
//
// Two operator sets are carried:
//  * a structure-preserving set (central differences conjugated by
//    sqrt-equilibrium, spectral angle operators) whose skewness/symmetry and
//    equilibrium annihilation hold to rounding, used by every diagnostic;
//  * a positivity-preserving set (donor-cell upwind transport, implicit
//    periodic-tridiagonal angle diffusion) used for robust time evolution.
class DiscreteOperators {
 public:
  DiscreteOperators(const Potential& potential, const GridSpec& grid);

  const GridSpec& grid() const { return grid_; }
  const Potential& potential() const { return potential_; }

  // --- measure, equilibrium ------------------------------------------------
  PhaseField equilibrium_field() const;
  const std::vector<double>& equilibrium_xy() const { return F_; }
  const std::vector<double>& sqrt_equilibrium_xy() const { return Fhalf_; }
  const std::vector<double>& weight_xy() const { return expV_; }  // e^{V}
  // discrete log-gradient of the equilibrium: G_a = -2 e^{V/2} D_a e^{-V/2}
  const std::vector<double>& log_gradient_x() const { return G1_; }
  const std::vector<double>& log_gradient_y() const { return G2_; }
  const std::vector<double>& grad_v_x() const { return gradVx_; }
  const std::vector<double>& grad_v_y() const { return gradVy_; }
  const AngleOperators& angle_ops() const { return angle_; }
  double equilibrium_tail_mass() const { return tail_mass_; }

  double inner(const PhaseField& f, const PhaseField& g) const;
  double norm(const PhaseField& f) const;
  double mass(const PhaseField& f) const;

  // --- representations ------------------------------------------------------
  // symmetrized representation phi = e^{V/2} f; isometric with the weighted
  // inner product, used internally by the structure-preserving set
  PhaseField to_symmetrized(const PhaseField& f) const;
  PhaseField from_symmetrized(const PhaseField& phi) const;

  // --- structure-preserving set ---------------------------------------------
  PhaseField apply_transport(const PhaseField& f) const;       // T_h, exactly skew
  PhaseField apply_transport_sym(const PhaseField& phi) const; // conjugated form
  PhaseField apply_collision(const PhaseField& f) const;       // spectral d^2/dalpha^2
  PhaseField apply_collision_fd(const PhaseField& f) const;    // periodic second difference
  double collision_dissipation(const PhaseField& f) const;     // -<L f, f> = |d_alpha f|^2

  // --- positivity-preserving set ---------------------------------------------
  // one donor-cell transport step (conservative; returns outflow mass)
  double upwind_transport_step(PhaseField& f, double dt, double kappa = 0.0) const;
  // (I - nu d^2/dalpha^2)^{-1}, periodic tridiagonal (monotone)
  void diffuse_implicit(PhaseField& f, double nu) const;
  // exact angular heat semigroup in the resolved modes: multiplier e^{-k^2 nu}
  void diffuse_spectral(PhaseField& f, double nu) const;

  // --- time-step bounds -------------------------------------------------------
  double admissible_dt_upwind(double safety = 0.9, double kappa = 0.0) const;
  double admissible_dt_central(double safety = 0.9) const;

 private:
  void apply_angle_matrix(const std::vector<double>& m, const PhaseField& in,
                          PhaseField& out) const;

  Potential potential_;
  GridSpec grid_;
  AngleOperators angle_;

  // spatial node data
  std::vector<double> V_, F_, Fhalf_, invFhalf_, expV_;
  std::vector<double> G1_, G2_;          // discrete log-gradient (structure set)
  std::vector<double> gradVx_, gradVy_;  // analytic gradient (upwind set)
  std::vector<double> cos_, sin_;        // tangent components at angle nodes
  std::vector<double> cosf_, sinf_;      // ... at angle faces
  double tail_mass_ = 0.0;
  double max_grad_norm_ = 0.0;
  double max_log_grad_norm_ = 0.0;
};

}  // namespace fiberlab
