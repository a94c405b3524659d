#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "fiberlab/geometry.hpp"

namespace fiberlab {

struct GridError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Spatial part of the phase-space grid: cell-centered uniform grid on the
// square [-box, box]^2.
struct SpatialGrid {
  int nx = 64;
  int ny = 64;
  double box = 6.0;

  double hx() const { return 2.0 * box / nx; }
  double hy() const { return 2.0 * box / ny; }
  double x(int i) const { return -box + (i + 0.5) * hx(); }
  double y(int j) const { return -box + (j + 0.5) * hy(); }
  std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * ny + j; }
  bool operator==(const SpatialGrid& o) const {
    return nx == o.nx && ny == o.ny && box == o.box;
  }
};

// Full phase-space grid: spatial grid times a uniform periodic angle grid with
// midpoint nodes. Midpoint quadrature makes every discrete angular average of
// the first Fourier modes vanish exactly, which the projection identities rely
// on. The angle count must be even and at least 4 so both first modes are
// resolved.
struct GridSpec {
  int nx = 64;
  int ny = 64;
  int nalpha = 32;
  double box = 6.0;

  void validate() const {
    if (nx < 4 || ny < 4) throw GridError("grid: need nx, ny >= 4");
    if (nalpha < 4 || nalpha % 2 != 0) throw GridError("grid: nalpha must be even and >= 4");
    if (!(box > 0.0)) throw GridError("grid: box half-width must be positive");
  }

  double hx() const { return 2.0 * box / nx; }
  double hy() const { return 2.0 * box / ny; }
  double halpha() const { return two_pi / nalpha; }
  double x(int i) const { return -box + (i + 0.5) * hx(); }
  double y(int j) const { return -box + (j + 0.5) * hy(); }
  double alpha(int k) const { return (k + 0.5) * halpha(); }
  // cell measure with the normalized angle measure d(alpha)/(2*pi)
  double cell_measure() const { return hx() * hy() / nalpha; }

  SpatialGrid spatial() const { return SpatialGrid{nx, ny, box}; }
  std::size_t size() const { return static_cast<std::size_t>(nx) * ny * nalpha; }
  std::size_t idx(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * ny + j) * static_cast<std::size_t>(nalpha) + k;
  }
  bool operator==(const GridSpec& o) const {
    return nx == o.nx && ny == o.ny && nalpha == o.nalpha && box == o.box;
  }
};

// Grid function on the phase-space grid (a density, a deviation from
// equilibrium, or a symmetrized field, depending on context).
struct PhaseField {
  GridSpec grid;
  std::vector<double> v;
  double time = 0.0;

  PhaseField() = default;
  explicit PhaseField(const GridSpec& g, double fill = 0.0)
      : grid(g), v(g.size(), fill) {}

  double& at(int i, int j, int k) { return v[grid.idx(i, j, k)]; }
  double at(int i, int j, int k) const { return v[grid.idx(i, j, k)]; }
};

// Angle-independent (macroscopic) grid function on the spatial grid.
struct MacroField {
  SpatialGrid grid;
  std::vector<double> v;

  MacroField() = default;
  explicit MacroField(const SpatialGrid& g, double fill = 0.0)
      : grid(g), v(g.size(), fill) {}

  double& at(int i, int j) { return v[grid.idx(i, j)]; }
  double at(int i, int j) const { return v[grid.idx(i, j)]; }
};

inline void require_same_grid(const GridSpec& a, const GridSpec& b) {
  if (!(a == b)) throw GridError("phase fields live on different grids");
}

inline void require_same_grid(const SpatialGrid& a, const SpatialGrid& b) {
  if (!(a == b)) throw GridError("macro fields live on different grids");
}

}  // namespace fiberlab
