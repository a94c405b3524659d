#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fiberlab/hypocoercivity.hpp"

namespace fiberlab {

struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Ordinary least-squares fit of an exponential decay rate from a time series
// of log ||f - F||^2. The rate convention follows the squared-norm series:
// lambda = -slope/2.
struct DecayFit {
  double t_lo = 0.0;
  double t_hi = 0.0;
  int points = 0;
  double slope = 0.0;
  double intercept = 0.0;
  double lambda = 0.0;
  double slope_stderr = 0.0;
  std::optional<double> r_squared;  // absent when the series is constant
  bool low_confidence = false;      // r^2 < 0.9 or undefined
};

struct FitWindow {
  double t_lo;
  double t_hi;
};

// Automatic window: drop the initial transient (first 20% of the total
// observed drop) and stop before the flattening tail (within 5% of the
// bottom), so Monte-Carlo noise floors are excluded. Falls back to the whole
// range when the series is too short or too flat to split.
FitWindow auto_fit_window(const std::vector<double>& t, const std::vector<double>& y);

DecayFit fit_rate(const std::vector<double>& t, const std::vector<double>& y,
                  std::optional<FitWindow> window = std::nullopt);

// One row of the noise-amplitude sweep.
struct SweepRow {
  double A = 0.0;
  double diffusivity = 0.0;
  double lambda_fit = 0.0;
  double lambda_theory = 0.0;
  double r_squared = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  std::string backend;
  bool failed = false;
  std::string error;
};

struct SweepSeries {
  std::vector<double> t;
  std::vector<double> log_norm_sq;
};

// Run one backend per amplitude and fit the decay rate; failures mark the row
// instead of aborting the sweep. lambda_theory comes from the rate chain with
// the supplied constants.
std::vector<SweepRow> sweep_amplitudes(const std::vector<double>& amplitudes,
                                       const std::function<SweepSeries(double A)>& backend,
                                       const std::string& backend_name, double lambda_gap,
                                       double c_v, double eta);

}  // namespace fiberlab
