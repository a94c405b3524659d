#include "fiberlab/rate.hpp"

#include <algorithm>
#include <cmath>

#include "fiberlab/util.hpp"

namespace fiberlab {

FitWindow auto_fit_window(const std::vector<double>& t, const std::vector<double>& y) {
  if (t.size() != y.size() || t.size() < 2) throw FitError("window selection needs a series");
  double y0 = y.front();
  double ymin = *std::min_element(y.begin(), y.end());
  double drop = y0 - ymin;
  if (!(drop > 0.0)) return {t.front(), t.back()};

  double start_level = y0 - 0.2 * drop;
  double floor_level = ymin + 0.05 * drop;
  double t_lo = t.front(), t_hi = t.back();
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (y[i] <= start_level) {
      t_lo = t[i];
      break;
    }
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (y[i] <= floor_level) {
      t_hi = t[i];
      break;
    }
  }
  // not enough room between transient and floor: use everything after the transient
  int count = 0;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] >= t_lo && t[i] <= t_hi) ++count;
  if (count < 5 || t_hi <= t_lo) t_hi = t.back();
  return {t_lo, t_hi};
}

DecayFit fit_rate(const std::vector<double>& t, const std::vector<double>& y,
                  std::optional<FitWindow> window) {
  if (t.size() != y.size()) throw FitError("fit_rate: mismatched series lengths");
  FitWindow w = window ? *window : auto_fit_window(t, y);

  std::vector<double> tt, yy;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < w.t_lo || t[i] > w.t_hi) continue;
    if (!std::isfinite(t[i]) || !std::isfinite(y[i]))
      throw FitError("fit_rate: non-finite data in the fitting window");
    tt.push_back(t[i]);
    yy.push_back(y[i]);
  }
  const std::size_t n = tt.size();
  if (n < 5) throw FitError("fit_rate: need at least 5 points in the window");

  KahanSum st, sy;
  for (std::size_t i = 0; i < n; ++i) {
    st.add(tt[i]);
    sy.add(yy[i]);
  }
  double tbar = st.value() / static_cast<double>(n);
  double ybar = sy.value() / static_cast<double>(n);
  KahanSum stt, sty, syy;
  for (std::size_t i = 0; i < n; ++i) {
    double dt = tt[i] - tbar, dy = yy[i] - ybar;
    stt.add(dt * dt);
    sty.add(dt * dy);
    syy.add(dy * dy);
  }
  if (!(stt.value() > 0.0)) throw FitError("fit_rate: degenerate window (all times equal)");

  DecayFit fit;
  fit.t_lo = w.t_lo;
  fit.t_hi = w.t_hi;
  fit.points = static_cast<int>(n);
  fit.slope = sty.value() / stt.value();
  fit.intercept = ybar - fit.slope * tbar;
  fit.lambda = -0.5 * fit.slope;

  double ss_res = std::max(0.0, syy.value() - fit.slope * sty.value());
  if (syy.value() > 0.0) {
    fit.r_squared = 1.0 - ss_res / syy.value();
    fit.low_confidence = *fit.r_squared < 0.9;
  } else {
    // constant series: slope 0, coefficient of determination undefined
    fit.r_squared = std::nullopt;
    fit.low_confidence = true;
  }
  if (n > 2) fit.slope_stderr = std::sqrt(ss_res / static_cast<double>(n - 2) / stt.value());
  return fit;
}

std::vector<SweepRow> sweep_amplitudes(const std::vector<double>& amplitudes,
                                       const std::function<SweepSeries(double A)>& backend,
                                       const std::string& backend_name, double lambda_gap,
                                       double c_v, double eta) {
  std::vector<SweepRow> rows;
  rows.reserve(amplitudes.size());
  for (double A : amplitudes) {
    SweepRow row;
    row.A = A;
    row.diffusivity = 0.5 * A * A;
    row.backend = backend_name;
    try {
      row.lambda_theory = theoretical_rate(lambda_gap, c_v, row.diffusivity, eta).lambda;
      SweepSeries series = backend(A);
      DecayFit fit = fit_rate(series.t, series.log_norm_sq);
      row.lambda_fit = fit.lambda;
      row.r_squared = fit.r_squared.value_or(0.0);
      row.window_lo = fit.t_lo;
      row.window_hi = fit.t_hi;
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace fiberlab
