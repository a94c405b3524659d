#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fiberlab/geometry.hpp"

namespace fiberlab {

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Physical parameters of the lay-down process. The diffusivity is always
// derived from the noise amplitude, never stored separately.
struct ModelParams {
  double A = 3.0;      // angular noise amplitude, >= 0
  double kappa = 0.0;  // belt speed, in [0,1]

  double diffusivity() const { return 0.5 * A * A; }
  void validate() const;
};

enum class PotentialFamily { Quadratic, PowerLaw, Tabulated, Custom };

struct PotentialEval {
  double value = 0.0;
  Vec2 grad{};
  Mat2 hess{};
};

// Confining potential with gradient and Hessian. Built-in families are
// normalized so that the equilibrium density e^{-V} integrates to one over
// the plane; the additive shift does not enter the dynamics.
class Potential {
 public:
  // V(x) = |x|^2/2 + log(2*pi); normalization exact.
  static Potential quadratic();
  // V(x) = (1+|x|^2)^beta + shift, beta >= 1/2; shift computed from the
  // closed-form radial integral (incomplete gamma).
  static Potential power_law(double beta);
  // Plain-text table: one header line, then rows "x1 x2 V" on a complete
  // rectangular grid. Derivatives by centered differences of the table.
  static Potential tabulated_from_file(const std::string& path);
  // Analytic potential supplied by the caller (used by tests and bindings).
  static Potential custom(std::function<double(Vec2)> value, std::function<Vec2(Vec2)> grad,
                          std::function<Mat2(Vec2)> hess, std::string name,
                          double normalization_shift = 0.0);

  PotentialEval eval(Vec2 p) const;
  double value(Vec2 p) const { return eval(p).value; }
  Vec2 grad(Vec2 p) const { return eval(p).grad; }
  double equilibrium(Vec2 p) const { return std::exp(-value(p)); }

  PotentialFamily family() const { return family_; }
  double beta() const { return beta_; }
  double normalization_shift() const { return shift_; }
  const std::string& description() const { return description_; }

  // Spectral-gap constant of the weighted Poincare inequality; populated by
  // the gap estimator, preset to 1 for the quadratic family.
  std::optional<double> spectral_gap() const { return spectral_gap_; }
  void set_spectral_gap(double v);
  // Constant of the pointwise Hessian bound |Hess V| <= c1 (1 + |grad V|).
  std::optional<double> c1() const { return c1_; }
  void set_c1(double v);

 private:
  Potential() = default;

  PotentialFamily family_ = PotentialFamily::Custom;
  double beta_ = 1.0;
  double shift_ = 0.0;
  std::string description_;
  std::optional<double> spectral_gap_;
  std::optional<double> c1_;

  std::function<PotentialEval(Vec2)> eval_;
};

struct HypothesisReport {
  double mass = 0.0;            // quadrature of e^{-V} over the sample box
  double h2_mass_error = 0.0;   // |mass - 1|
  bool h2_pass = false;
  bool mass_diverging = false;  // grew under box expansion instead of settling
  double h4_worst_ratio = 0.0;  // sup |Hess V|_F / (1 + |grad V|) over the grid
  double c1 = 0.0;              // constant used (given, else the observed sup)
  bool h4_pass = false;
  double theta = 0.5;           // derived constants of the auxiliary pointwise bound
  double c0 = 0.0;              // c1 + 2 c1^2
};

// Verify normalization and the pointwise Hessian condition on a sample box
// [-box,box]^2 at the given resolution.
HypothesisReport check_hypotheses(const Potential& potential, double box, int resolution,
                                  double mass_tolerance = 1e-6);

// Midpoint-rule quadrature of e^{-V} over [-box,box]^2.
double equilibrium_mass(const Potential& potential, double box, int resolution);

}  // namespace fiberlab
