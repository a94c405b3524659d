#pragma once

#include <cmath>

namespace fiberlab {

inline constexpr double two_pi = 6.28318530717958647692528676655900577;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

struct Mat2 {
  double xx = 0.0, xy = 0.0;
  double yx = 0.0, yy = 0.0;

  double frobenius() const { return std::sqrt(xx * xx + xy * xy + yx * yx + yy * yy); }
};

// Unit tangent of the lay-down curve as a function of the angle variable.
inline Vec2 tangent(double alpha) { return {std::cos(alpha), std::sin(alpha)}; }

// d(tangent)/dalpha; orthogonal to tangent(alpha) for every alpha.
inline Vec2 tangent_perp(double alpha) { return {-std::sin(alpha), std::cos(alpha)}; }

// Reduce an angle to [0, 2*pi).
inline double wrap_angle(double a) {
  double r = std::fmod(a, two_pi);
  return r < 0.0 ? r + two_pi : r;
}

}  // namespace fiberlab
