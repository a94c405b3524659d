#include "fiberlab/operators.hpp"

#include <cmath>

#include "fiberlab/util.hpp"

namespace fiberlab {

namespace {

AngleOperators build_angle_operators(const GridSpec& grid) {
  const int n = grid.nalpha;
  AngleOperators ops;
  ops.n = n;
  ops.basis.assign(static_cast<std::size_t>(n) * n, 0.0);
  ops.mode_k.assign(static_cast<std::size_t>(n), 0);

  // Orthonormal trigonometric basis on the midpoint angle grid. Columns:
  // constant, then (cos, sin) pairs, then the Nyquist mode. With midpoint
  // nodes the Nyquist cosine vanishes identically, so the surviving Nyquist
  // vector is the alternating sine.
  auto set = [&](int col, int k, bool is_sin, double scale) {
    ops.mode_k[static_cast<std::size_t>(col)] = k;
    for (int r = 0; r < n; ++r) {
      double a = grid.alpha(r) * k;
      ops.basis[static_cast<std::size_t>(r) * n + col] = scale * (is_sin ? std::sin(a) : std::cos(a));
    }
  };
  int col = 0;
  set(col++, 0, false, std::sqrt(1.0 / n));
  for (int k = 1; k < n / 2; ++k) {
    set(col++, k, false, std::sqrt(2.0 / n));
    set(col++, k, true, std::sqrt(2.0 / n));
  }
  set(col++, n / 2, true, std::sqrt(1.0 / n));

  // First derivative: rotates each (cos,sin) pair, kills constant and Nyquist.
  // Assembled row>col first, then mirrored, so antisymmetry is bitwise.
  std::vector<double> d(static_cast<std::size_t>(n) * n, 0.0);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < r; ++c) {
      double acc = 0.0;
      int m = 1;
      for (int k = 1; k < n / 2; ++k, m += 2) {
        double ck_r = ops.b(r, m), sk_r = ops.b(r, m + 1);
        double ck_c = ops.b(c, m), sk_c = ops.b(c, m + 1);
        // d/dalpha cos(k a) = -k sin(k a);  d/dalpha sin(k a) = k cos(k a)
        acc += k * (ck_r * sk_c - sk_r * ck_c);
      }
      d[static_cast<std::size_t>(r) * n + c] = acc;
      d[static_cast<std::size_t>(c) * n + r] = -acc;
    }
  }
  ops.deriv = std::move(d);

  // Second derivative: -k^2 multiplier on every mode, Nyquist included.
  std::vector<double> s(static_cast<std::size_t>(n) * n, 0.0);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c <= r; ++c) {
      double acc = 0.0;
      for (int m = 0; m < n; ++m) {
        double k = ops.mode_k[static_cast<std::size_t>(m)];
        acc += -(k * k) * ops.b(r, m) * ops.b(c, m);
      }
      s[static_cast<std::size_t>(r) * n + c] = acc;
      s[static_cast<std::size_t>(c) * n + r] = acc;
    }
  }
  ops.second = std::move(s);
  return ops;
}

}  // namespace

DiscreteOperators::DiscreteOperators(const Potential& potential, const GridSpec& grid)
    : potential_(potential), grid_(grid) {
  grid_.validate();
  angle_ = build_angle_operators(grid_);

  const int nx = grid_.nx, ny = grid_.ny, na = grid_.nalpha;
  const std::size_t nxy = grid_.spatial().size();
  V_.resize(nxy);
  F_.resize(nxy);
  Fhalf_.resize(nxy);
  invFhalf_.resize(nxy);
  expV_.resize(nxy);
  gradVx_.resize(nxy);
  gradVy_.resize(nxy);
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      std::size_t id = grid_.spatial().idx(i, j);
      PotentialEval e = potential_.eval({grid_.x(i), grid_.y(j)});
      V_[id] = e.value;
      F_[id] = std::exp(-e.value);
      Fhalf_[id] = std::exp(-0.5 * e.value);
      invFhalf_[id] = std::exp(0.5 * e.value);
      expV_[id] = std::exp(e.value);
      gradVx_[id] = e.grad.x;
      gradVy_[id] = e.grad.y;
      max_grad_norm_ = std::max(max_grad_norm_, e.grad.norm());
    }
  }

  // Discrete log-gradient: defined through the centered difference of the
  // sqrt-equilibrium (zero ghost values), so the transport operator below
  // annihilates the equilibrium exactly, boundary rows included.
  G1_.assign(nxy, 0.0);
  G2_.assign(nxy, 0.0);
  const double hx = grid_.hx(), hy = grid_.hy();
  auto fh = [&](int i, int j) -> double {
    if (i < 0 || i >= nx || j < 0 || j >= ny) return 0.0;
    return Fhalf_[grid_.spatial().idx(i, j)];
  };
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      std::size_t id = grid_.spatial().idx(i, j);
      G1_[id] = -2.0 * invFhalf_[id] * (fh(i + 1, j) - fh(i - 1, j)) / (2.0 * hx);
      G2_[id] = -2.0 * invFhalf_[id] * (fh(i, j + 1) - fh(i, j - 1)) / (2.0 * hy);
      max_log_grad_norm_ = std::max(max_log_grad_norm_, std::hypot(G1_[id], G2_[id]));
    }
  }

  cos_.resize(static_cast<std::size_t>(na));
  sin_.resize(static_cast<std::size_t>(na));
  cosf_.resize(static_cast<std::size_t>(na));
  sinf_.resize(static_cast<std::size_t>(na));
  for (int k = 0; k < na; ++k) {
    cos_[k] = std::cos(grid_.alpha(k));
    sin_[k] = std::sin(grid_.alpha(k));
    double face = (k + 1) * grid_.halpha();  // face between cells k and k+1
    cosf_[k] = std::cos(face);
    sinf_[k] = std::sin(face);
  }

  KahanSum m;
  for (double f : F_) m.add(f);
  tail_mass_ = std::abs(1.0 - m.value() * hx * hy);
}

PhaseField DiscreteOperators::equilibrium_field() const {
  PhaseField f(grid_);
  for (int i = 0; i < grid_.nx; ++i)
    for (int j = 0; j < grid_.ny; ++j) {
      double val = F_[grid_.spatial().idx(i, j)];
      for (int k = 0; k < grid_.nalpha; ++k) f.at(i, j, k) = val;
    }
  return f;
}

double DiscreteOperators::inner(const PhaseField& f, const PhaseField& g) const {
  require_same_grid(f.grid, grid_);
  require_same_grid(g.grid, grid_);
  KahanSum sum;
  const int na = grid_.nalpha;
  for (std::size_t s = 0; s < grid_.spatial().size(); ++s) {
    double w = expV_[s];
    const double* fp = f.v.data() + s * na;
    const double* gp = g.v.data() + s * na;
    double cell = 0.0;
    for (int k = 0; k < na; ++k) cell += fp[k] * gp[k];
    sum.add(w * cell);
  }
  return sum.value() * grid_.cell_measure();
}

double DiscreteOperators::norm(const PhaseField& f) const { return std::sqrt(std::max(0.0, inner(f, f))); }

double DiscreteOperators::mass(const PhaseField& f) const {
  require_same_grid(f.grid, grid_);
  KahanSum sum;
  for (double x : f.v) sum.add(x);
  return sum.value() * grid_.cell_measure();
}

PhaseField DiscreteOperators::to_symmetrized(const PhaseField& f) const {
  require_same_grid(f.grid, grid_);
  PhaseField phi(grid_);
  phi.time = f.time;
  const int na = grid_.nalpha;
  for (std::size_t s = 0; s < grid_.spatial().size(); ++s) {
    double w = invFhalf_[s];
    for (int k = 0; k < na; ++k) phi.v[s * na + k] = w * f.v[s * na + k];
  }
  return phi;
}

PhaseField DiscreteOperators::from_symmetrized(const PhaseField& phi) const {
  require_same_grid(phi.grid, grid_);
  PhaseField f(grid_);
  f.time = phi.time;
  const int na = grid_.nalpha;
  for (std::size_t s = 0; s < grid_.spatial().size(); ++s) {
    double w = Fhalf_[s];
    for (int k = 0; k < na; ++k) f.v[s * na + k] = w * phi.v[s * na + k];
  }
  return f;
}

// T~ phi = tangent . grad_x phi - (1/2)(D_alpha C + C D_alpha) phi, with
// C = diag(tangent_perp . G). Central x-differences with zero ghosts and the
// exactly antisymmetric angle derivative make this operator an exactly
// antisymmetric matrix in the flat inner product; conjugation by the
// sqrt-equilibrium then gives exact skewness in the weighted product.
PhaseField DiscreteOperators::apply_transport_sym(const PhaseField& phi) const {
  require_same_grid(phi.grid, grid_);
  PhaseField out(grid_);
  out.time = phi.time;
  const int nx = grid_.nx, ny = grid_.ny, na = grid_.nalpha;
  const double ihx2 = 1.0 / (2.0 * grid_.hx());
  const double ihy2 = 1.0 / (2.0 * grid_.hy());

#pragma omp parallel
  {
    std::vector<double> c(static_cast<std::size_t>(na));
    std::vector<double> cphi(static_cast<std::size_t>(na));
    std::vector<double> dcphi(static_cast<std::size_t>(na));
    std::vector<double> dphi(static_cast<std::size_t>(na));
#pragma omp for
    for (int i = 0; i < nx; ++i) {
      for (int j = 0; j < ny; ++j) {
        std::size_t s = grid_.spatial().idx(i, j);
        const double* col = phi.v.data() + s * na;
        const double* xm = (i > 0) ? phi.v.data() + grid_.idx(i - 1, j, 0) : nullptr;
        const double* xp = (i < nx - 1) ? phi.v.data() + grid_.idx(i + 1, j, 0) : nullptr;
        const double* ym = (j > 0) ? phi.v.data() + grid_.idx(i, j - 1, 0) : nullptr;
        const double* yp = (j < ny - 1) ? phi.v.data() + grid_.idx(i, j + 1, 0) : nullptr;
        double g1 = G1_[s], g2 = G2_[s];
        for (int k = 0; k < na; ++k) {
          c[k] = -sin_[k] * g1 + cos_[k] * g2;
          cphi[k] = c[k] * col[k];
        }
        // dense angle matvecs: D_alpha (c phi) and D_alpha phi
        for (int r = 0; r < na; ++r) {
          const double* drow = angle_.deriv.data() + static_cast<std::size_t>(r) * na;
          double acc1 = 0.0, acc2 = 0.0;
          for (int k = 0; k < na; ++k) {
            acc1 += drow[k] * cphi[k];
            acc2 += drow[k] * col[k];
          }
          dcphi[r] = acc1;
          dphi[r] = acc2;
        }
        double* o = out.v.data() + s * na;
        for (int k = 0; k < na; ++k) {
          double dx = ((xp ? xp[k] : 0.0) - (xm ? xm[k] : 0.0)) * ihx2;
          double dy = ((yp ? yp[k] : 0.0) - (ym ? ym[k] : 0.0)) * ihy2;
          o[k] = cos_[k] * dx + sin_[k] * dy - 0.5 * (dcphi[k] + c[k] * dphi[k]);
        }
      }
    }
  }
  return out;
}

PhaseField DiscreteOperators::apply_transport(const PhaseField& f) const {
  return from_symmetrized(apply_transport_sym(to_symmetrized(f)));
}

void DiscreteOperators::apply_angle_matrix(const std::vector<double>& m, const PhaseField& in,
                                           PhaseField& out) const {
  const int na = grid_.nalpha;
  out.grid = in.grid;
  out.time = in.time;
  out.v.resize(in.v.size());
#pragma omp parallel for
  for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(grid_.spatial().size()); ++s) {
    const double* col = in.v.data() + static_cast<std::size_t>(s) * na;
    double* o = out.v.data() + static_cast<std::size_t>(s) * na;
    for (int r = 0; r < na; ++r) {
      const double* row = m.data() + static_cast<std::size_t>(r) * na;
      double acc = 0.0;
      for (int k = 0; k < na; ++k) acc += row[k] * col[k];
      o[r] = acc;
    }
  }
}

PhaseField DiscreteOperators::apply_collision(const PhaseField& f) const {
  require_same_grid(f.grid, grid_);
  PhaseField out;
  apply_angle_matrix(angle_.second, f, out);
  return out;
}

PhaseField DiscreteOperators::apply_collision_fd(const PhaseField& f) const {
  require_same_grid(f.grid, grid_);
  PhaseField out(grid_);
  out.time = f.time;
  const int na = grid_.nalpha;
  const double ih2 = 1.0 / (grid_.halpha() * grid_.halpha());
  for (std::size_t s = 0; s < grid_.spatial().size(); ++s) {
    const double* col = f.v.data() + s * na;
    double* o = out.v.data() + s * na;
    for (int k = 0; k < na; ++k) {
      int km = (k == 0) ? na - 1 : k - 1;
      int kp = (k == na - 1) ? 0 : k + 1;
      o[k] = (col[kp] - 2.0 * col[k] + col[km]) * ih2;
    }
  }
  return out;
}

double DiscreteOperators::collision_dissipation(const PhaseField& f) const {
  return -inner(apply_collision(f), f);
}

double DiscreteOperators::upwind_transport_step(PhaseField& f, double dt, double kappa) const {
  require_same_grid(f.grid, grid_);
  const int nx = grid_.nx, ny = grid_.ny, na = grid_.nalpha;
  const double rx = dt / grid_.hx();
  const double ry = dt / grid_.hy();
  const double ra = dt / grid_.halpha();

  PhaseField next(grid_);
  next.time = f.time;
  KahanSum outflow;

  // gather form: every contribution is nonnegative, so positivity under the
  // CFL condition is exact, and mass balances against the boundary outflow
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      std::size_t s = grid_.spatial().idx(i, j);
      double gx = gradVx_[s], gy = gradVy_[s];
      const double* col = f.v.data() + s * na;
      double* o = next.v.data() + s * na;
      double cell_out = 0.0;
      for (int k = 0; k < na; ++k) {
        double vx = cos_[k] + kappa;
        double vy = sin_[k];
        // angle drift at the two faces of cell k: b = -(tangent_perp . grad V)
        int km = (k == 0) ? na - 1 : k - 1;
        int kp = (k == na - 1) ? 0 : k + 1;
        double b_hi = sinf_[k] * gx - cosf_[k] * gy;
        double b_lo = sinf_[km] * gx - cosf_[km] * gy;

        double out_coeff = rx * std::abs(vx) + ry * std::abs(vy) +
                           ra * (std::max(b_hi, 0.0) + std::max(-b_lo, 0.0));
        double acc = col[k] * (1.0 - out_coeff);
        // inflow in x
        if (vx > 0.0) {
          if (i > 0) acc += rx * vx * f.at(i - 1, j, k);
        } else if (i < nx - 1) {
          acc += rx * (-vx) * f.at(i + 1, j, k);
        }
        // inflow in y
        if (vy > 0.0) {
          if (j > 0) acc += ry * vy * f.at(i, j - 1, k);
        } else if (j < ny - 1) {
          acc += ry * (-vy) * f.at(i, j + 1, k);
        }
        // inflow in alpha (periodic, same spatial cell)
        if (b_lo > 0.0) acc += ra * b_lo * col[km];
        if (b_hi < 0.0) acc += ra * (-b_hi) * col[kp];
        o[k] = acc;

        // boundary outflow bookkeeping (x/y faces at the box edge)
        if (vx > 0.0 && i == nx - 1) cell_out += rx * vx * col[k];
        if (vx < 0.0 && i == 0) cell_out += rx * (-vx) * col[k];
        if (vy > 0.0 && j == ny - 1) cell_out += ry * vy * col[k];
        if (vy < 0.0 && j == 0) cell_out += ry * (-vy) * col[k];
      }
      outflow.add(cell_out);
    }
  }
  f.v.swap(next.v);
  f.time += dt;
  return outflow.value() * grid_.cell_measure();
}

void DiscreteOperators::diffuse_implicit(PhaseField& f, double nu) const {
  require_same_grid(f.grid, grid_);
  if (nu <= 0.0) return;
  const int n = grid_.nalpha;
  const double r = nu / (grid_.halpha() * grid_.halpha());
  const double diag = 1.0 + 2.0 * r;
  const double off = -r;

  // cyclic Thomas via Sherman-Morrison; factorization shared by all columns
  const double gamma = -diag;
  std::vector<double> bb(static_cast<std::size_t>(n), diag);
  bb[0] = diag - gamma;
  bb[static_cast<std::size_t>(n - 1)] = diag - off * off / gamma;
  std::vector<double> cp(static_cast<std::size_t>(n), 0.0);
  std::vector<double> denom(static_cast<std::size_t>(n), 0.0);
  denom[0] = bb[0];
  cp[0] = off / denom[0];
  for (int k = 1; k < n; ++k) {
    denom[static_cast<std::size_t>(k)] = bb[static_cast<std::size_t>(k)] - off * cp[static_cast<std::size_t>(k - 1)];
    cp[static_cast<std::size_t>(k)] = off / denom[static_cast<std::size_t>(k)];
  }
  auto thomas = [&](std::vector<double>& rhs) {
    rhs[0] /= denom[0];
    for (int k = 1; k < n; ++k)
      rhs[static_cast<std::size_t>(k)] =
          (rhs[static_cast<std::size_t>(k)] - off * rhs[static_cast<std::size_t>(k - 1)]) /
          denom[static_cast<std::size_t>(k)];
    for (int k = n - 2; k >= 0; --k)
      rhs[static_cast<std::size_t>(k)] -= cp[static_cast<std::size_t>(k)] * rhs[static_cast<std::size_t>(k + 1)];
  };
  std::vector<double> u(static_cast<std::size_t>(n), 0.0);
  u[0] = gamma;
  u[static_cast<std::size_t>(n - 1)] = off;
  thomas(u);
  const double vu = u[0] + (off / gamma) * u[static_cast<std::size_t>(n - 1)];

#pragma omp parallel
  {
    std::vector<double> y(static_cast<std::size_t>(n));
#pragma omp for
    for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(grid_.spatial().size()); ++s) {
      double* col = f.v.data() + static_cast<std::size_t>(s) * n;
      for (int k = 0; k < n; ++k) y[static_cast<std::size_t>(k)] = col[k];
      thomas(y);
      double vy = y[0] + (off / gamma) * y[static_cast<std::size_t>(n - 1)];
      double factor = vy / (1.0 + vu);
      for (int k = 0; k < n; ++k) col[k] = y[static_cast<std::size_t>(k)] - factor * u[static_cast<std::size_t>(k)];
    }
  }
}

void DiscreteOperators::diffuse_spectral(PhaseField& f, double nu) const {
  require_same_grid(f.grid, grid_);
  if (nu <= 0.0) return;
  const int n = grid_.nalpha;
  std::vector<double> mult(static_cast<std::size_t>(n));
  for (int m = 0; m < n; ++m) {
    double k = angle_.mode_k[static_cast<std::size_t>(m)];
    mult[static_cast<std::size_t>(m)] = std::exp(-k * k * nu);
  }
#pragma omp parallel
  {
    std::vector<double> coef(static_cast<std::size_t>(n));
#pragma omp for
    for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(grid_.spatial().size()); ++s) {
      double* col = f.v.data() + static_cast<std::size_t>(s) * n;
      for (int m = 0; m < n; ++m) {
        double acc = 0.0;
        for (int r = 0; r < n; ++r) acc += angle_.b(r, m) * col[r];
        coef[static_cast<std::size_t>(m)] = acc * mult[static_cast<std::size_t>(m)];
      }
      for (int r = 0; r < n; ++r) {
        double acc = 0.0;
        for (int m = 0; m < n; ++m) acc += angle_.b(r, m) * coef[static_cast<std::size_t>(m)];
        col[r] = acc;
      }
    }
  }
}

double DiscreteOperators::admissible_dt_upwind(double safety, double kappa) const {
  double speed = (1.0 + std::abs(kappa)) / grid_.hx() + 1.0 / grid_.hy() +
                 max_grad_norm_ / grid_.halpha();
  return safety / speed;
}

double DiscreteOperators::admissible_dt_central(double safety) const {
  // RK4 imaginary-axis stability limit ~2.82 against a bound on the spectral
  // radius of the skew transport operator
  double bound_x = 0.0;
  for (int k = 0; k < grid_.nalpha; ++k)
    bound_x = std::max(bound_x, std::abs(cos_[k]) / grid_.hx() + std::abs(sin_[k]) / grid_.hy());
  double bound_a = max_log_grad_norm_ * (grid_.nalpha / 2);
  return 2.7 * safety / (bound_x + bound_a);
}

}  // namespace fiberlab
