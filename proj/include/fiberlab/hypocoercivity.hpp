#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fiberlab/operators.hpp"

namespace fiberlab {

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IterationReport {
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

struct CgOptions {
  double tol = 1e-12;
  int max_iterations = 50000;
};

// Micro/macro decomposition toolbox for the kinetic operator pair: the
// angle-average projection, the macroscopic elliptic resolvent, the bounded
// auxiliary operator it generates, the modified entropy and its dissipation,
// and numerical estimates of the functional-inequality constants.
//
// Everything is built from the structure-preserving operator set by exact
// composition/transposition, so the operator identities that the continuous
// theory relies on hold at the discrete level to rounding (plus iterative
// solver residuals).
class Hypocoercivity {
 public:
  explicit Hypocoercivity(const DiscreteOperators& ops, CgOptions cg = {});

  const DiscreteOperators& ops() const { return ops_; }

  // --- projections ----------------------------------------------------------
  MacroField project(const PhaseField& g) const;       // angle average
  PhaseField lift(const MacroField& rho) const;        // angle-independent embed
  PhaseField fluctuation(const PhaseField& g) const;   // g - lift(project g)
  double macro_inner(const MacroField& a, const MacroField& b) const;  // weight e^{V}
  double macro_norm(const MacroField& a) const;

  // --- operator building blocks ---------------------------------------------
  // transport applied to the lifted density: tau . e^{-V} grad(e^{V} rho)
  PhaseField apply_t_pi(const MacroField& rho) const;
  // exact discrete adjoint of apply_t_pi composed with projection: -Pi T_h g
  MacroField t_pi_adjoint(const PhaseField& g) const;
  // macroscopic operator (T Pi)* (T Pi) as a spatial stencil (exact reduction
  // of the operator composition; see apply_b_composed for the long route)
  MacroField apply_b(const MacroField& rho) const;
  MacroField apply_b_composed(const MacroField& rho) const;

  // solve rho_g = e^{-V} u - (1/2) div(e^{-V} grad u); returns u
  MacroField solve_elliptic(const MacroField& rho_g, IterationReport* report = nullptr) const;
  // resolvent (1 + (T Pi)* T Pi)^{-1} acting on densities
  MacroField resolvent(const MacroField& rho, IterationReport* report = nullptr) const;

  // auxiliary operator: A g = (1 + (T Pi)* T Pi)^{-1} (T Pi)* g
  MacroField apply_a(const PhaseField& g, IterationReport* report = nullptr) const;

  // --- entropy functionals -----------------------------------------------------
  double modified_entropy(const PhaseField& g, double eps) const;

  struct DissipationBreakdown {
    double microscopic = 0.0;   // -D <L g, g>
    double macroscopic = 0.0;   //  eps <A T Pi g, g>
    double cross = 0.0;         //  eps <A T (1-Pi) g, g>
    double transport_a = 0.0;   // -eps <T A g, g>
    double collision_a = 0.0;   // -eps D <A L g, g>
    double total = 0.0;
  };
  DissipationBreakdown dissipation(const PhaseField& g, double eps, double diffusivity) const;

  // --- constants of the functional inequalities --------------------------------
  // operator norm of (A T)* by Lanczos iteration on (A T)(A T)*
  double estimate_cv(IterationReport* report = nullptr, int max_iterations = 80,
                     double tol = 1e-11) const;

  // --- verification -----------------------------------------------------------
  // smooth deterministic pseudo-random deviation with zero spatial mean
  PhaseField random_test_field(std::uint64_t seed, std::uint64_t index) const;

  struct CoercivityRow {
    std::string inequality;
    std::string comparison;  // ">=" or "<="
    double bound = 0.0;
    double worst_ratio = 0.0;
    int trials = 0;
    bool pass = false;
  };
  std::vector<CoercivityRow> verify_coercivity(double lambda_gap, double c_v, int trials,
                                               std::uint64_t seed, double slack = 1e-8) const;

 private:
  void apply_shifted_elliptic_sym(const std::vector<double>& psi, std::vector<double>& out) const;
  std::vector<double> cg_solve_sym(const std::vector<double>& rhs, IterationReport* report) const;

  const DiscreteOperators& ops_;
  CgOptions cg_;
  SpatialGrid sgrid_;
  std::vector<double> precond_;  // Jacobi diagonal of the shifted elliptic operator
};

// Smallest nonzero eigenvalue of u -> -e^{V} div(e^{-V} grad u) restricted to
// functions with zero e^{-V}-weighted mean, on the truncated box with natural
// boundary conditions: inverse iteration with exact deflation of constants.
struct GapOptions {
  int max_outer = 300;
  double tol = 1e-10;
  double cg_tol = 1e-12;
  int cg_max_iterations = 200000;
};
double estimate_spectral_gap(const Potential& potential, const SpatialGrid& grid,
                             IterationReport* report = nullptr, const GapOptions& options = {});

// --- theoretical decay-rate chain ---------------------------------------------
struct RateChain {
  double lambda_gap = 0.0;  // spectral-gap constant
  double c_v = 0.0;
  double eta = 0.0;
  double diffusivity = 0.0;
  double delta = 0.0;
  double r = 0.0;
  double s = 0.0;
  double eps_bar = 0.0;
  double eps_bar_max = 0.0;
  double eps = 0.0;
  double lambda = 0.0;  // exponential decay rate of the norm
};

RateChain theoretical_rate(double lambda_gap, double c_v, double diffusivity, double eta);

// Fit lambda(D) ~ prefactor * C1 D / (1 + C2 D^2) with prefactor eta/(1+eta).
struct ClosedFormFit {
  std::vector<double> diffusivities;
  std::vector<double> lambdas;
  double c1 = 0.0;
  double c2 = 0.0;
  double r_squared = 0.0;
};
ClosedFormFit fit_closed_form(double lambda_gap, double c_v, double eta,
                              const std::vector<double>& diffusivities);

}  // namespace fiberlab
