#include "fiberlab/model.hpp"

#include <algorithm>
#include <array>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "fiberlab/util.hpp"

namespace fiberlab {

void ModelParams::validate() const {
  if (!(A >= 0.0) || !std::isfinite(A)) throw ModelError("noise amplitude A must be >= 0");
  if (!(kappa >= 0.0 && kappa <= 1.0))
    throw ModelError("belt speed kappa must lie in [0,1]: the belt cannot outrun the lay-down speed");
}

void Potential::set_spectral_gap(double v) {
  if (!(v > 0.0)) throw ModelError("spectral gap must be positive");
  spectral_gap_ = v;
}

void Potential::set_c1(double v) {
  if (!(v > 0.0)) throw ModelError("c1 must be positive");
  c1_ = v;
}

PotentialEval Potential::eval(Vec2 p) const { return eval_(p); }

Potential Potential::quadratic() {
  Potential pot;
  pot.family_ = PotentialFamily::Quadratic;
  pot.shift_ = std::log(two_pi);
  pot.description_ = "quadratic";
  pot.spectral_gap_ = 1.0;        // Gaussian gap; revalidated by the estimator
  pot.c1_ = std::sqrt(2.0);       // |Hess|_F = sqrt(2) everywhere
  double shift = pot.shift_;
  pot.eval_ = [shift](Vec2 p) {
    PotentialEval e;
    e.value = 0.5 * (p.x * p.x + p.y * p.y) + shift;
    e.grad = p;
    e.hess = Mat2{1.0, 0.0, 0.0, 1.0};
    return e;
  };
  return pot;
}

Potential Potential::power_law(double beta) {
  if (!(beta >= 0.5)) throw ModelError("power-law exponent must satisfy beta >= 1/2");
  Potential pot;
  pot.family_ = PotentialFamily::PowerLaw;
  pot.beta_ = beta;
  // integral of exp(-(1+|x|^2)^beta) over R^2 = (pi/beta) * Gamma(1/beta, 1)
  double integral = (M_PI / beta) * boost::math::tgamma(1.0 / beta, 1.0);
  pot.shift_ = std::log(integral);
  pot.description_ = "power-law beta=" + std::to_string(beta);
  double shift = pot.shift_;
  pot.eval_ = [beta, shift](Vec2 p) {
    PotentialEval e;
    double r2 = p.x * p.x + p.y * p.y;
    double base = 1.0 + r2;
    double pow_m1 = std::pow(base, beta - 1.0);
    double pow_m2 = std::pow(base, beta - 2.0);
    e.value = pow_m1 * base + shift;
    double c = 2.0 * beta * pow_m1;
    e.grad = {c * p.x, c * p.y};
    double d = 4.0 * beta * (beta - 1.0) * pow_m2;
    e.hess = Mat2{c + d * p.x * p.x, d * p.x * p.y, d * p.x * p.y, c + d * p.y * p.y};
    return e;
  };
  return pot;
}

Potential Potential::custom(std::function<double(Vec2)> value, std::function<Vec2(Vec2)> grad,
                            std::function<Mat2(Vec2)> hess, std::string name,
                            double normalization_shift) {
  Potential pot;
  pot.family_ = PotentialFamily::Custom;
  pot.shift_ = normalization_shift;
  pot.description_ = std::move(name);
  pot.eval_ = [v = std::move(value), g = std::move(grad), h = std::move(hess)](Vec2 p) {
    return PotentialEval{v(p), g(p), h(p)};
  };
  return pot;
}

namespace {

struct Table {
  std::vector<double> xs, ys;  // sorted grid coordinates
  std::vector<double> v;       // v[i*ny + j]
  double at(std::size_t i, std::size_t j) const { return v[i * ys.size() + j]; }
};

Table load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open tabulated potential file: " + path);
  std::string header;
  std::getline(in, header);  // header line is ignored
  std::map<double, std::size_t> xi, yi;
  std::vector<std::array<double, 3>> rows;
  double a, b, c;
  while (in >> a >> b >> c) {
    rows.push_back({a, b, c});
    xi.emplace(a, 0);
    yi.emplace(b, 0);
  }
  if (rows.empty()) throw ModelError("tabulated potential file has no data rows: " + path);
  Table t;
  for (auto& [k, idx] : xi) {
    idx = t.xs.size();
    t.xs.push_back(k);
  }
  for (auto& [k, idx] : yi) {
    idx = t.ys.size();
    t.ys.push_back(k);
  }
  t.v.assign(t.xs.size() * t.ys.size(), std::nan(""));
  for (const auto& r : rows) t.v[xi.at(r[0]) * t.ys.size() + yi.at(r[1])] = r[2];
  for (double val : t.v)
    if (std::isnan(val)) throw ModelError("tabulated potential grid is incomplete: " + path);
  if (t.xs.size() < 4 || t.ys.size() < 4)
    throw ModelError("tabulated potential grid too small (need at least 4x4)");
  return t;
}

}  // namespace

Potential Potential::tabulated_from_file(const std::string& path) {
  auto table = std::make_shared<Table>(load_table(path));
  Potential pot;
  pot.family_ = PotentialFamily::Tabulated;
  pot.description_ = "tabulated:" + path;
  pot.eval_ = [table](Vec2 p) {
    const auto& xs = table->xs;
    const auto& ys = table->ys;
    if (p.x < xs.front() || p.x > xs.back() || p.y < ys.front() || p.y > ys.back())
      throw ModelError("tabulated potential evaluated outside its domain");
    auto cell = [](const std::vector<double>& g, double q) {
      auto it = std::upper_bound(g.begin(), g.end(), q);
      std::size_t hi = static_cast<std::size_t>(it - g.begin());
      hi = std::clamp<std::size_t>(hi, 1, g.size() - 1);
      return hi - 1;
    };
    // interior node nearest to p, kept one node away from the edge so the
    // centered difference stencils below stay on the table
    std::size_t i = std::clamp<std::size_t>(cell(xs, p.x), 1, xs.size() - 3);
    std::size_t j = std::clamp<std::size_t>(cell(ys, p.y), 1, ys.size() - 3);
    double hx = xs[i + 1] - xs[i];
    double hy = ys[j + 1] - ys[j];
    double tx = (p.x - xs[i]) / hx;
    double ty = (p.y - ys[j]) / hy;

    PotentialEval e;
    e.value = (1 - tx) * (1 - ty) * table->at(i, j) + tx * (1 - ty) * table->at(i + 1, j) +
              (1 - tx) * ty * table->at(i, j + 1) + tx * ty * table->at(i + 1, j + 1);
    auto node = [&](std::size_t ii, std::size_t jj) { return table->at(ii, jj); };
    auto gx = [&](std::size_t ii, std::size_t jj) {
      return (node(ii + 1, jj) - node(ii - 1, jj)) / (xs[ii + 1] - xs[ii - 1]);
    };
    auto gy = [&](std::size_t ii, std::size_t jj) {
      return (node(ii, jj + 1) - node(ii, jj - 1)) / (ys[jj + 1] - ys[jj - 1]);
    };
    e.grad.x = (1 - tx) * gx(i, j) + tx * gx(i + 1, j);
    e.grad.y = (1 - ty) * gy(i, j) + ty * gy(i, j + 1);
    e.hess.xx = (node(i + 1, j) - 2 * node(i, j) + node(i - 1, j)) / (hx * hx);
    e.hess.yy = (node(i, j + 1) - 2 * node(i, j) + node(i, j - 1)) / (hy * hy);
    double cross = (node(i + 1, j + 1) - node(i + 1, j - 1) - node(i - 1, j + 1) + node(i - 1, j - 1)) /
                   (4.0 * hx * hy);
    e.hess.xy = e.hess.yx = cross;
    return e;
  };
  return pot;
}

double equilibrium_mass(const Potential& potential, double box, int resolution) {
  double h = 2.0 * box / resolution;
  KahanSum sum;
  for (int i = 0; i < resolution; ++i) {
    double x = -box + (i + 0.5) * h;
    for (int j = 0; j < resolution; ++j) {
      double y = -box + (j + 0.5) * h;
      sum.add(potential.equilibrium({x, y}));
    }
  }
  return sum.value() * h * h;
}

HypothesisReport check_hypotheses(const Potential& potential, double box, int resolution,
                                  double mass_tolerance) {
  if (resolution < 8) throw ModelError("check_hypotheses: resolution too coarse");
  HypothesisReport rep;
  rep.mass = equilibrium_mass(potential, box, resolution);
  rep.h2_mass_error = std::abs(rep.mass - 1.0);
  double mass_wider = equilibrium_mass(potential, 1.5 * box, (resolution * 3) / 2);
  rep.mass_diverging = (mass_wider - rep.mass) > std::max(1e-3, 10.0 * rep.h2_mass_error);
  rep.h2_pass = !rep.mass_diverging && rep.h2_mass_error <= mass_tolerance;

  double h = 2.0 * box / resolution;
  double worst = 0.0;
  for (int i = 0; i < resolution; ++i) {
    double x = -box + (i + 0.5) * h;
    for (int j = 0; j < resolution; ++j) {
      double y = -box + (j + 0.5) * h;
      PotentialEval e = potential.eval({x, y});
      worst = std::max(worst, e.hess.frobenius() / (1.0 + e.grad.norm()));
    }
  }
  rep.h4_worst_ratio = worst;
  rep.c1 = potential.c1().value_or(worst);
  rep.h4_pass = rep.h4_worst_ratio <= rep.c1 * (1.0 + 1e-12);
  rep.theta = 0.5;
  rep.c0 = rep.c1 + 2.0 * rep.c1 * rep.c1;
  return rep;
}

}  // namespace fiberlab
