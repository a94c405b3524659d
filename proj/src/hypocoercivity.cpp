#include "fiberlab/hypocoercivity.hpp"

#include <algorithm>
#include <cmath>

#include "fiberlab/rng.hpp"
#include "fiberlab/util.hpp"

namespace fiberlab {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  KahanSum s;
  for (std::size_t i = 0; i < a.size(); ++i) s.add(a[i] * b[i]);
  return s.value();
}

// largest eigenvalue of a symmetric tridiagonal matrix by Sturm bisection
double tridiag_max_eigenvalue(const std::vector<double>& diag, const std::vector<double>& off) {
  const std::size_t n = diag.size();
  double hi = diag[0], lo = diag[0];
  for (std::size_t i = 0; i < n; ++i) {
    double radius = (i > 0 ? std::abs(off[i - 1]) : 0.0) + (i + 1 < n ? std::abs(off[i]) : 0.0);
    hi = std::max(hi, diag[i] + radius);
    lo = std::min(lo, diag[i] - radius);
  }
  auto count_below = [&](double x) {
    int count = 0;
    double d = diag[0] - x;
    if (d < 0) ++count;
    for (std::size_t i = 1; i < n; ++i) {
      double b2 = off[i - 1] * off[i - 1];
      d = diag[i] - x - b2 / (d == 0.0 ? 1e-300 : d);
      if (d < 0) ++count;
    }
    return count;
  };
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (count_below(mid) == static_cast<int>(n))
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

Hypocoercivity::Hypocoercivity(const DiscreteOperators& ops, CgOptions cg)
    : ops_(ops), cg_(cg), sgrid_(ops.grid().spatial()) {
  // Jacobi diagonal of 1 + (1/2) sum_a Dt_a D_a with Dt_a = (central diff)_a
  // + (1/2) G_a: column sums of squares per direction.
  const auto& g1 = ops_.log_gradient_x();
  const auto& g2 = ops_.log_gradient_y();
  const double wx = 1.0 / (4.0 * sgrid_.hx() * sgrid_.hx());
  const double wy = 1.0 / (4.0 * sgrid_.hy() * sgrid_.hy());
  precond_.assign(sgrid_.size(), 0.0);
  for (int i = 0; i < sgrid_.nx; ++i) {
    for (int j = 0; j < sgrid_.ny; ++j) {
      std::size_t id = sgrid_.idx(i, j);
      double d = 0.0;
      d += wx * ((i > 0 ? 1.0 : 0.0) + (i + 1 < sgrid_.nx ? 1.0 : 0.0));
      d += wy * ((j > 0 ? 1.0 : 0.0) + (j + 1 < sgrid_.ny ? 1.0 : 0.0));
      d += 0.25 * (g1[id] * g1[id] + g2[id] * g2[id]);
      precond_[id] = 1.0 + 0.5 * d;
    }
  }
}

MacroField Hypocoercivity::project(const PhaseField& g) const {
  require_same_grid(g.grid, ops_.grid());
  const int na = g.grid.nalpha;
  MacroField rho(sgrid_);
  for (std::size_t s = 0; s < sgrid_.size(); ++s) {
    const double* col = g.v.data() + s * na;
    KahanSum acc;
    for (int k = 0; k < na; ++k) acc.add(col[k]);
    rho.v[s] = acc.value() / na;
  }
  return rho;
}

PhaseField Hypocoercivity::lift(const MacroField& rho) const {
  require_same_grid(rho.grid, sgrid_);
  PhaseField f(ops_.grid());
  const int na = f.grid.nalpha;
  for (std::size_t s = 0; s < sgrid_.size(); ++s)
    for (int k = 0; k < na; ++k) f.v[s * na + k] = rho.v[s];
  return f;
}

PhaseField Hypocoercivity::fluctuation(const PhaseField& g) const {
  MacroField rho = project(g);
  PhaseField out = g;
  const int na = g.grid.nalpha;
  for (std::size_t s = 0; s < sgrid_.size(); ++s)
    for (int k = 0; k < na; ++k) out.v[s * na + k] -= rho.v[s];
  return out;
}

double Hypocoercivity::macro_inner(const MacroField& a, const MacroField& b) const {
  require_same_grid(a.grid, sgrid_);
  require_same_grid(b.grid, sgrid_);
  const auto& w = ops_.weight_xy();
  KahanSum s;
  for (std::size_t i = 0; i < a.v.size(); ++i) s.add(w[i] * a.v[i] * b.v[i]);
  return s.value() * sgrid_.hx() * sgrid_.hy();
}

double Hypocoercivity::macro_norm(const MacroField& a) const {
  return std::sqrt(std::max(0.0, macro_inner(a, a)));
}

PhaseField Hypocoercivity::apply_t_pi(const MacroField& rho) const {
  return ops_.apply_transport(lift(rho));
}

MacroField Hypocoercivity::t_pi_adjoint(const PhaseField& g) const {
  MacroField w = project(ops_.apply_transport(g));
  for (double& x : w.v) x = -x;
  return w;
}

// (T Pi)*(T Pi) reduces exactly to (1/2) sum_a Dt_a^T Dt_a on symmetrized
// spatial fields: the angular averages of products of first harmonics are
// exact on the uniform midpoint grid.
void Hypocoercivity::apply_shifted_elliptic_sym(const std::vector<double>& psi,
                                                std::vector<double>& out) const {
  const int nx = sgrid_.nx, ny = sgrid_.ny;
  const double ihx2 = 1.0 / (2.0 * sgrid_.hx());
  const double ihy2 = 1.0 / (2.0 * sgrid_.hy());
  const auto& g1 = ops_.log_gradient_x();
  const auto& g2 = ops_.log_gradient_y();

  auto val = [&](int i, int j) -> double {
    return (i < 0 || i >= nx || j < 0 || j >= ny) ? 0.0 : psi[sgrid_.idx(i, j)];
  };
  std::vector<double> mx(sgrid_.size()), my(sgrid_.size());
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      std::size_t id = sgrid_.idx(i, j);
      mx[id] = (val(i + 1, j) - val(i - 1, j)) * ihx2 + 0.5 * g1[id] * psi[id];
      my[id] = (val(i, j + 1) - val(i, j - 1)) * ihy2 + 0.5 * g2[id] * psi[id];
    }
  auto mxv = [&](int i, int j) -> double {
    return (i < 0 || i >= nx || j < 0 || j >= ny) ? 0.0 : mx[sgrid_.idx(i, j)];
  };
  auto myv = [&](int i, int j) -> double {
    return (i < 0 || i >= nx || j < 0 || j >= ny) ? 0.0 : my[sgrid_.idx(i, j)];
  };
  out.resize(sgrid_.size());
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      std::size_t id = sgrid_.idx(i, j);
      double ax = -(mxv(i + 1, j) - mxv(i - 1, j)) * ihx2 + 0.5 * g1[id] * mx[id];
      double ay = -(myv(i, j + 1) - myv(i, j - 1)) * ihy2 + 0.5 * g2[id] * my[id];
      out[id] = psi[id] + 0.5 * (ax + ay);
    }
}

std::vector<double> Hypocoercivity::cg_solve_sym(const std::vector<double>& rhs,
                                                 IterationReport* report) const {
  const std::size_t n = rhs.size();
  std::vector<double> x(n, 0.0), r = rhs, z(n), p(n), q(n);
  double rhs_norm = std::sqrt(dot(rhs, rhs));
  IterationReport rep;
  if (rhs_norm == 0.0) {
    rep.converged = true;
    if (report) *report = rep;
    return x;
  }
  for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / precond_[i];
  p = z;
  double rz = dot(r, z);
  for (int it = 0; it < cg_.max_iterations; ++it) {
    apply_shifted_elliptic_sym(p, q);
    double pq = dot(p, q);
    if (!(pq > 0.0)) throw SolverError("elliptic CG: operator lost positive definiteness");
    double alpha = rz / pq;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    double rn = std::sqrt(dot(r, r));
    rep.iterations = it + 1;
    rep.residual = rn / rhs_norm;
    if (rep.residual <= cg_.tol) {
      rep.converged = true;
      break;
    }
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / precond_[i];
    double rz_new = dot(r, z);
    double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  if (!rep.converged && report == nullptr)
    throw SolverError("elliptic CG failed to reach tolerance; residual " +
                      std::to_string(rep.residual));
  if (report) *report = rep;
  return x;
}

MacroField Hypocoercivity::apply_b(const MacroField& rho) const {
  require_same_grid(rho.grid, sgrid_);
  const auto& fh = ops_.sqrt_equilibrium_xy();
  std::vector<double> psi(sgrid_.size());
  for (std::size_t i = 0; i < psi.size(); ++i) psi[i] = rho.v[i] / fh[i];
  std::vector<double> out;
  apply_shifted_elliptic_sym(psi, out);
  MacroField b(sgrid_);
  for (std::size_t i = 0; i < psi.size(); ++i) b.v[i] = (out[i] - psi[i]) * fh[i];
  return b;
}

MacroField Hypocoercivity::apply_b_composed(const MacroField& rho) const {
  MacroField w = t_pi_adjoint(apply_t_pi(rho));
  return w;
}

MacroField Hypocoercivity::resolvent(const MacroField& rho, IterationReport* report) const {
  require_same_grid(rho.grid, sgrid_);
  const auto& fh = ops_.sqrt_equilibrium_xy();
  std::vector<double> rhs(sgrid_.size());
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = rho.v[i] / fh[i];
  std::vector<double> psi = cg_solve_sym(rhs, report);
  MacroField out(sgrid_);
  for (std::size_t i = 0; i < psi.size(); ++i) out.v[i] = psi[i] * fh[i];
  return out;
}

MacroField Hypocoercivity::solve_elliptic(const MacroField& rho_g, IterationReport* report) const {
  MacroField rho_h = resolvent(rho_g, report);
  const auto& f = ops_.equilibrium_xy();
  MacroField u(sgrid_);
  for (std::size_t i = 0; i < u.v.size(); ++i) u.v[i] = rho_h.v[i] / f[i];
  return u;
}

MacroField Hypocoercivity::apply_a(const PhaseField& g, IterationReport* report) const {
  return resolvent(t_pi_adjoint(g), report);
}

double Hypocoercivity::modified_entropy(const PhaseField& g, double eps) const {
  if (!(eps > 0.0 && eps < 1.0)) throw SolverError("modified entropy needs eps in (0,1)");
  double nrm = ops_.norm(g);
  MacroField a = apply_a(g);
  return 0.5 * nrm * nrm + eps * macro_inner(a, project(g));
}

Hypocoercivity::DissipationBreakdown Hypocoercivity::dissipation(const PhaseField& g, double eps,
                                                                 double diffusivity) const {
  DissipationBreakdown out;
  MacroField rho = project(g);

  PhaseField lg = ops_.apply_collision(g);
  out.microscopic = -diffusivity * ops_.inner(lg, g);

  // A T Pi = 1 - (1 + (T Pi)* T Pi)^{-1} on densities
  MacroField res = resolvent(rho);
  MacroField atp(sgrid_);
  for (std::size_t i = 0; i < atp.v.size(); ++i) atp.v[i] = rho.v[i] - res.v[i];
  out.macroscopic = eps * macro_inner(atp, rho);

  PhaseField gperp = fluctuation(g);
  MacroField w = t_pi_adjoint(ops_.apply_transport(gperp));
  MacroField cross = resolvent(w);
  out.cross = eps * macro_inner(cross, rho);

  MacroField ag = apply_a(g);
  PhaseField tag = ops_.apply_transport(lift(ag));
  out.transport_a = -eps * ops_.inner(tag, g);

  MacroField alg = apply_a(lg);
  out.collision_a = -eps * diffusivity * macro_inner(alg, rho);

  out.total = out.microscopic + out.macroscopic + out.cross + out.transport_a + out.collision_a;
  return out;
}

double Hypocoercivity::estimate_cv(IterationReport* report, int max_iterations, double tol) const {
  // Lanczos with full reorthogonalization on S = (A T)(A T)*, a self-adjoint
  // positive operator on densities in the e^{V}-weighted inner product.
  // S m = (A T)(A T)* m: with (A T)* m = -T^2 lift(resolvent(m)) and
  // (A T) z = resolvent(-Pi T^2 z), the two sign flips cancel and
  // S m = resolvent(Pi T^4 lift(resolvent(m))).
  auto apply_s = [&](const MacroField& m) {
    PhaseField t = ops_.apply_transport(lift(resolvent(m)));
    t = ops_.apply_transport(t);
    t = ops_.apply_transport(t);
    t = ops_.apply_transport(t);
    return resolvent(project(t));
  };

  MacroField v(sgrid_);
  for (std::size_t i = 0; i < v.v.size(); ++i) {
    auto [u1, u2] = counter_uniform2(0x5eedc0ffeeULL, 7, i);
    v.v[i] = 2.0 * u1 - 1.0;
    (void)u2;
  }
  double nv = macro_norm(v);
  for (double& x : v.v) x /= nv;

  std::vector<MacroField> basis{v};
  std::vector<double> alpha, beta;
  IterationReport rep;
  double lambda_prev = 0.0;
  for (int j = 0; j < max_iterations; ++j) {
    MacroField w = apply_s(basis.back());
    if (j > 0)
      for (std::size_t i = 0; i < w.v.size(); ++i) w.v[i] -= beta.back() * basis[j - 1].v[i];
    double a = macro_inner(w, basis[static_cast<std::size_t>(j)]);
    alpha.push_back(a);
    for (std::size_t i = 0; i < w.v.size(); ++i) w.v[i] -= a * basis[j].v[i];
    for (int pass = 0; pass < 2; ++pass)
      for (const MacroField& b : basis) {
        double c = macro_inner(w, b);
        for (std::size_t i = 0; i < w.v.size(); ++i) w.v[i] -= c * b.v[i];
      }
    double bnorm = macro_norm(w);
    double lambda = tridiag_max_eigenvalue(alpha, beta);
    rep.iterations = j + 1;
    rep.residual = (j > 0) ? std::abs(lambda - lambda_prev) / std::max(lambda, 1e-300) : 1.0;
    lambda_prev = lambda;
    if (rep.residual <= tol || bnorm <= 1e-13) {
      rep.converged = true;
      break;
    }
    beta.push_back(bnorm);
    for (double& x : w.v) x /= bnorm;
    basis.push_back(std::move(w));
  }
  if (report) *report = rep;
  return std::sqrt(std::max(0.0, lambda_prev));
}

PhaseField Hypocoercivity::random_test_field(std::uint64_t seed, std::uint64_t index) const {
  const GridSpec& g = ops_.grid();
  PhaseField phi(g);
  int q = 0;
  auto draw = [&]() {
    auto [u1, u2] = counter_uniform2(seed, (std::uint64_t{2} << 60) + index, q++);
    return std::pair<double, double>{u1, u2};
  };
  const int bumps = 6;
  for (int m = 0; m < bumps; ++m) {
    auto [u1, u2] = draw();
    auto [u3, u4] = draw();
    auto [u5, u6] = draw();
    double amp = 2.0 * u1 - 1.0;
    double cx = (2.0 * u2 - 1.0) * 0.4 * g.box;
    double cy = (2.0 * u3 - 1.0) * 0.4 * g.box;
    double width = 0.6 + 0.8 * u4;
    // guarantee both a macroscopic and a microscopic component
    int k = (m == 0) ? 0 : (m == 1 ? 1 : static_cast<int>(u5 * 3.999));
    double phase = two_pi * u6;
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j) {
        double dx = g.x(i) - cx, dy = g.y(j) - cy;
        double bump = amp * std::exp(-0.5 * (dx * dx + dy * dy) / (width * width));
        for (int kk = 0; kk < g.nalpha; ++kk)
          phi.at(i, j, kk) += bump * std::cos(k * g.alpha(kk) + phase);
      }
  }
  PhaseField f = ops_.from_symmetrized(phi);
  // remove the conserved equilibrium component: deviations of probability
  // densities have zero total mass
  PhaseField eq = ops_.equilibrium_field();
  double c = ops_.mass(f) / ops_.mass(eq);
  for (std::size_t i = 0; i < f.v.size(); ++i) f.v[i] -= c * eq.v[i];
  return f;
}

std::vector<Hypocoercivity::CoercivityRow> Hypocoercivity::verify_coercivity(
    double lambda_gap, double c_v, int trials, std::uint64_t seed, double slack) const {
  double micro_worst = 1e300, macro_worst = 1e300;
  double a_worst = 0.0, ta_worst = 0.0, al_worst = 0.0, at_worst = 0.0;

  for (int t = 0; t < trials; ++t) {
    PhaseField g = random_test_field(seed, static_cast<std::uint64_t>(t));
    PhaseField gperp = fluctuation(g);
    MacroField rho = project(g);
    double n_perp = ops_.norm(gperp);
    double n_macro = macro_norm(rho);

    PhaseField lg = ops_.apply_collision(g);
    if (n_perp > 0.0)
      micro_worst = std::min(micro_worst, -ops_.inner(lg, g) / (n_perp * n_perp));

    MacroField res = resolvent(rho);
    MacroField atp(sgrid_);
    for (std::size_t i = 0; i < atp.v.size(); ++i) atp.v[i] = rho.v[i] - res.v[i];
    if (n_macro > 0.0)
      macro_worst = std::min(macro_worst, macro_inner(atp, rho) / (n_macro * n_macro));

    MacroField ag = apply_a(g);
    if (n_perp > 0.0) {
      a_worst = std::max(a_worst, macro_norm(ag) / n_perp);
      PhaseField tag = ops_.apply_transport(lift(ag));
      ta_worst = std::max(ta_worst, ops_.norm(tag) / n_perp);
      MacroField alg = apply_a(lg);
      al_worst = std::max(al_worst, macro_norm(alg) / n_perp);
      MacroField atperp = resolvent(t_pi_adjoint(ops_.apply_transport(gperp)));
      at_worst = std::max(at_worst, macro_norm(atperp) / n_perp);
    }
  }

  std::vector<CoercivityRow> rows;
  auto lower = [&](std::string name, double bound, double worst) {
    rows.push_back({std::move(name), ">=", bound, worst, trials, worst >= bound});
  };
  auto upper = [&](std::string name, double bound, double worst) {
    rows.push_back({std::move(name), "<=", bound, worst, trials, worst <= bound});
  };
  lower("microscopic_coercivity", 1.0 - 1e-10, micro_worst);
  lower("macroscopic_coercivity", lambda_gap / (2.0 + lambda_gap) - 1e-6, macro_worst);
  upper("a_bounded_by_half_fluctuation", 0.5 + slack, a_worst);
  upper("ta_bounded_by_fluctuation", 1.0 + slack, ta_worst);
  upper("al_bounded_by_half_fluctuation", 0.5 + slack, al_worst);
  upper("at_bounded_by_cv", c_v + std::max(slack, 1e-6 * c_v), at_worst);
  return rows;
}

// ---------------------------------------------------------------------------
// spectral gap of the weighted spatial operator
// ---------------------------------------------------------------------------

namespace {

struct GapOperator {
  SpatialGrid grid;
  std::vector<double> sqrtF;
  std::vector<double> ax_hi, ay_hi;  // sqrt(F_+/F_i) per face, stored at the lower cell
  std::vector<double> diag;

  explicit GapOperator(const Potential& pot, const SpatialGrid& g) : grid(g) {
    std::vector<double> F(grid.size());
    sqrtF.resize(grid.size());
    for (int i = 0; i < grid.nx; ++i)
      for (int j = 0; j < grid.ny; ++j) {
        F[grid.idx(i, j)] = pot.equilibrium({grid.x(i), grid.y(j)});
        sqrtF[grid.idx(i, j)] = std::sqrt(F[grid.idx(i, j)]);
      }
    ax_hi.assign(grid.size(), 0.0);
    ay_hi.assign(grid.size(), 0.0);
    for (int i = 0; i + 1 < grid.nx; ++i)
      for (int j = 0; j < grid.ny; ++j)
        ax_hi[grid.idx(i, j)] = sqrtF[grid.idx(i + 1, j)] / sqrtF[grid.idx(i, j)];
    for (int i = 0; i < grid.nx; ++i)
      for (int j = 0; j + 1 < grid.ny; ++j)
        ay_hi[grid.idx(i, j)] = sqrtF[grid.idx(i, j + 1)] / sqrtF[grid.idx(i, j)];
    diag.assign(grid.size(), 0.0);
    const double ihx2 = 1.0 / (grid.hx() * grid.hx());
    const double ihy2 = 1.0 / (grid.hy() * grid.hy());
    for (int i = 0; i < grid.nx; ++i)
      for (int j = 0; j < grid.ny; ++j) {
        std::size_t id = grid.idx(i, j);
        double d = 0.0;
        if (i + 1 < grid.nx) d += ihx2 * ax_hi[id];
        if (i > 0) d += ihx2 / ax_hi[grid.idx(i - 1, j)];
        if (j + 1 < grid.ny) d += ihy2 * ay_hi[id];
        if (j > 0) d += ihy2 / ay_hi[grid.idx(i, j - 1)];
        diag[id] = d;
      }
  }

  void apply(const std::vector<double>& psi, std::vector<double>& out) const {
    const double ihx2 = 1.0 / (grid.hx() * grid.hx());
    const double ihy2 = 1.0 / (grid.hy() * grid.hy());
    out.assign(grid.size(), 0.0);
    for (int i = 0; i < grid.nx; ++i)
      for (int j = 0; j < grid.ny; ++j) {
        std::size_t id = grid.idx(i, j);
        double acc = diag[id] * psi[id];
        if (i + 1 < grid.nx) acc -= ihx2 * psi[grid.idx(i + 1, j)];
        if (i > 0) acc -= ihx2 * psi[grid.idx(i - 1, j)];
        if (j + 1 < grid.ny) acc -= ihy2 * psi[grid.idx(i, j + 1)];
        if (j > 0) acc -= ihy2 * psi[grid.idx(i, j - 1)];
        out[id] = acc;
      }
  }
};

}  // namespace

double estimate_spectral_gap(const Potential& potential, const SpatialGrid& grid,
                             IterationReport* report, const GapOptions& options) {
  GapOperator H(potential, grid);
  const std::size_t n = grid.size();

  std::vector<double> kernel = H.sqrtF;
  double kn = std::sqrt(dot(kernel, kernel));
  for (double& x : kernel) x /= kn;
  auto deflate = [&](std::vector<double>& v) {
    double c = dot(v, kernel);
    for (std::size_t i = 0; i < n; ++i) v[i] -= c * kernel[i];
  };

  // CG on the orthogonal complement of the kernel
  auto cg = [&](const std::vector<double>& rhs) {
    std::vector<double> x(n, 0.0), r = rhs, z(n), p(n), q(n);
    deflate(r);
    double rhs_norm = std::sqrt(dot(r, r));
    if (rhs_norm == 0.0) return x;
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / H.diag[i];
    deflate(z);
    p = z;
    double rz = dot(r, z);
    for (int it = 0; it < options.cg_max_iterations; ++it) {
      H.apply(p, q);
      deflate(q);
      double pq = dot(p, q);
      if (!(pq > 0.0)) throw SolverError("spectral-gap CG: lost positive definiteness");
      double alpha = rz / pq;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * q[i];
      }
      if (std::sqrt(dot(r, r)) <= options.cg_tol * rhs_norm) break;
      for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / H.diag[i];
      deflate(z);
      double rz_new = dot(r, z);
      double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    return x;
  };

  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto [u1, u2] = counter_uniform2(0x9a9ULL, 11, i);
    y[i] = 2.0 * u1 - 1.0;
    (void)u2;
  }
  deflate(y);
  double ny = std::sqrt(dot(y, y));
  for (double& v : y) v /= ny;

  IterationReport rep;
  double lambda = 0.0;
  for (int it = 0; it < options.max_outer; ++it) {
    std::vector<double> z = cg(y);
    deflate(z);
    double zz = dot(z, z);
    double zy = dot(z, y);
    double lambda_new = zy / zz;  // Rayleigh quotient of H at z, since H z = y
    rep.iterations = it + 1;
    double rel = std::abs(lambda_new - lambda) / std::max(std::abs(lambda_new), 1e-300);
    lambda = lambda_new;
    double zn = std::sqrt(zz);
    for (std::size_t i = 0; i < n; ++i) y[i] = z[i] / zn;
    if (it > 0 && rel <= options.tol) {
      rep.converged = true;
      break;
    }
  }
  // residual ||H y - lambda y||
  std::vector<double> hy(n);
  H.apply(y, hy);
  KahanSum rs;
  for (std::size_t i = 0; i < n; ++i) {
    double d = hy[i] - lambda * y[i];
    rs.add(d * d);
  }
  rep.residual = std::sqrt(rs.value());
  if (report) *report = rep;
  if (!(lambda > 0.0)) throw SolverError("spectral-gap estimate came out non-positive");
  return lambda;
}

// ---------------------------------------------------------------------------
// theoretical rate chain
// ---------------------------------------------------------------------------

namespace {

double rate_r(double lambda_gap, double c_v, double D) {
  double q = c_v + 1.0 + 0.5 * D;
  return q + (2.0 + lambda_gap) * q * q / (2.0 * lambda_gap);
}

double eps_bar_of(double lambda_gap, double c_v, double s, double D) {
  return D / (rate_r(lambda_gap, c_v, D) + s);
}

double golden_max_eps_bar(double lambda_gap, double c_v, double s) {
  // eps_bar is smooth, positive, and vanishes at both ends of the D range;
  // golden-section on log10 D
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = -4.0, hi = 4.0;
  double x1 = hi - gr * (hi - lo);
  double x2 = lo + gr * (hi - lo);
  auto f = [&](double t) { return eps_bar_of(lambda_gap, c_v, s, std::pow(10.0, t)); };
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 200; ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = f(x1);
    }
  }
  return std::max(f1, f2);
}

}  // namespace

RateChain theoretical_rate(double lambda_gap, double c_v, double diffusivity, double eta) {
  if (!(lambda_gap > 0.0) || !(c_v > 0.0) || !(diffusivity > 0.0) || !(eta > 0.0))
    throw SolverError("theoretical_rate needs positive gap, c_v, diffusivity and eta");
  RateChain rc;
  rc.lambda_gap = lambda_gap;
  rc.c_v = c_v;
  rc.eta = eta;
  rc.diffusivity = diffusivity;
  double q = c_v + 1.0 + 0.5 * diffusivity;
  rc.delta = lambda_gap / ((2.0 + lambda_gap) * q);
  rc.r = rate_r(lambda_gap, c_v, diffusivity);
  rc.s = lambda_gap / (2.0 * (2.0 + lambda_gap));
  rc.eps_bar = eps_bar_of(lambda_gap, c_v, rc.s, diffusivity);
  rc.eps_bar_max = std::max(1.0, golden_max_eps_bar(lambda_gap, c_v, rc.s));
  rc.eps = eta / (1.0 + eta) * rc.eps_bar / rc.eps_bar_max;
  rc.lambda = 0.5 * rc.eps * rc.s;
  return rc;
}

ClosedFormFit fit_closed_form(double lambda_gap, double c_v, double eta,
                              const std::vector<double>& diffusivities) {
  ClosedFormFit fit;
  fit.diffusivities = diffusivities;
  fit.lambdas.reserve(diffusivities.size());
  for (double d : diffusivities)
    fit.lambdas.push_back(theoretical_rate(lambda_gap, c_v, d, eta).lambda);

  // linearized least squares: lambda = pf*C1*D - C2*(D^2 lambda), pf = eta/(1+eta)
  double pf = eta / (1.0 + eta);
  double s11 = 0, s12 = 0, s22 = 0, b1 = 0, b2 = 0;
  for (std::size_t i = 0; i < diffusivities.size(); ++i) {
    double d = diffusivities[i], l = fit.lambdas[i];
    double f1 = d, f2 = -d * d * l;
    s11 += f1 * f1;
    s12 += f1 * f2;
    s22 += f2 * f2;
    b1 += f1 * l;
    b2 += f2 * l;
  }
  double det = s11 * s22 - s12 * s12;
  if (std::abs(det) < 1e-300) throw SolverError("closed-form fit is degenerate");
  double c1p = (b1 * s22 - b2 * s12) / det;
  double c2 = (s11 * b2 - s12 * b1) / det;
  fit.c1 = c1p / pf;
  fit.c2 = c2;

  double mean = 0;
  for (double l : fit.lambdas) mean += l;
  mean /= static_cast<double>(fit.lambdas.size());
  double ss_tot = 0, ss_res = 0;
  for (std::size_t i = 0; i < diffusivities.size(); ++i) {
    double d = diffusivities[i];
    double pred = pf * fit.c1 * d / (1.0 + fit.c2 * d * d);
    ss_res += (fit.lambdas[i] - pred) * (fit.lambdas[i] - pred);
    ss_tot += (fit.lambdas[i] - mean) * (fit.lambdas[i] - mean);
  }
  fit.r_squared = (ss_tot > 0) ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

}  // namespace fiberlab
