#pragma once

// Deterministic baseline intensity lambda_inf(t): constant, piecewise-constant,
// or a log-linear cosine-bump spline exp(sum_i xi_i f_i(t)). The bump basis is
// an exact partition of unity inside the window, so equal coefficients give an
// exactly constant baseline.

#include <utility>
#include <vector>

#include "oflow/common.hpp"

namespace oflow {

struct SplineBaseline {
  int n_basis = 0;               // >= 4
  std::vector<double> coeffs;    // xi_i, one per basis function, size n_basis
  TimeWindow window;             // (T_b, T_e)

  double width() const { return window.length() / (n_basis - 3); }
  void validate() const;
};

// f_i(t) for 1-based basis index i: the cosine bump (cos(pi x / 2) + 1) / 4 on
// |x| <= 2, evaluated at x = (t - T_b - (i - 2) w) / w.
double cosine_basis(int i, double t, const SplineBaseline& spline);

class Baseline {
 public:
  enum class Kind { Constant, Piecewise, Spline };

  static Baseline constant(double rate);
  // `breakpoints` are segment edges spanning the window (first = window begin,
  // last = window end); `rates` has one entry per segment.
  static Baseline piecewise(std::vector<double> breakpoints, std::vector<double> rates);
  static Baseline spline(SplineBaseline s);

  Kind kind() const { return kind_; }

  double value(double t) const;
  double integral(double a, double b) const;

  // True upper bound of value() over [a, b] (used as a thinning envelope).
  double upper_bound(double a, double b) const;

  // Interior knots where the baseline is only piecewise-smooth; integration
  // and thinning envelopes split at these.
  std::vector<double> knots() const;

  // Average rate over the window (constant-equivalent reduction).
  double average(const TimeWindow& window) const;

  // Accessors for the calibration code's parameter handling.
  double constant_rate() const { return rate_; }
  const std::vector<double>& piecewise_breakpoints() const { return breakpoints_; }
  const std::vector<double>& piecewise_rates() const { return rates_; }
  const SplineBaseline& spline_data() const { return spline_; }

  // Active basis functions at t: (1-based index, f_i(t)) pairs, spline only.
  std::vector<std::pair<int, double>> basis_values(double t) const;

 private:
  Kind kind_ = Kind::Constant;
  double rate_ = 0.0;
  std::vector<double> breakpoints_;
  std::vector<double> rates_;
  SplineBaseline spline_;
};

}  // namespace oflow
