#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace fiberlab {

// Compensated (Kahan) accumulator. All inner products and norms route through
// this so that structural identities can be asserted at 1e-12 relative
// tolerances on grids with ~1e5 cells.
class KahanSum {
 public:
  void add(double x) {
    double y = x - comp_;
    double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  if (n == 1) {
    out[0] = a;
    return out;
  }
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
  return out;
}

inline std::vector<double> logspace(double lo, double hi, int n) {
  std::vector<double> e = linspace(lo, hi, n);
  for (double& x : e) x = std::pow(10.0, x);
  return e;
}

// Shortest-round-trip decimal formatting; used everywhere a double is written
// to text so that reruns reproduce files byte for byte.
std::string format_double(double v);

}  // namespace fiberlab
