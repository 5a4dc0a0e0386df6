#pragma once

// Goodness-of-fit and stylized-fact diagnostics: time-change residuals,
// distributional tests against the unit exponential, independence tests,
// empirical intensity curves, QQ data, and signature (realized-variance)
// surfaces.

#include <utility>
#include <vector>

#include "oflow/hawkes.hpp"
#include "oflow/simulate.hpp"

namespace oflow {

// Time-change residuals per component: the integrated intensity between
// consecutive events of that component (unit-exponential under the true
// model). Returns one series per component, each of length max(n_m - 1, 0).
std::vector<std::vector<double>> time_change_residuals(
    const HawkesSpec& spec, const std::vector<EventStream>& events);

struct DiagnosticsReport {
  double ks_stat = 0.0;
  double ks_p = 1.0;
  double ad_stat = 0.0;        // Anderson-Darling vs Exp(1), statistic only
  double lb_q = 0.0;           // Ljung-Box Q
  double lb_p = 1.0;
  int lb_lags = 0;
  bool lb_valid = false;       // false when the series is degenerate (zero variance)
  double wasserstein = 0.0;    // W1 distance between the empirical CDF and Exp(1)
  double aic = 0.0;            // carried through from the fit for reporting
};

// Distribution + independence battery on a residual series. Ljung-Box
// degeneracy (constant series) is flagged, never NaN. Throws on empty input.
DiagnosticsReport diagnostics(const std::vector<double>& residuals, int lags = 100,
                              double aic = 0.0);

// Classical two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
std::pair<double, double> ks_two_sample(const std::vector<double>& a,
                                        const std::vector<double>& b);

// Exact W1 distance between the empirical distribution of a sample and Exp(1)
// (piecewise closed form, no quadrature error).
double wasserstein_exp1(std::vector<double> sample);

// QQ plot data against Exp(1): (theoretical quantile at (i-0.5)/n, sorted
// sample value).
std::vector<std::pair<double, double>> qq_exponential(std::vector<double> sample);

// Bucketed event-rate estimate: value k is (count in [k dt, (k+1) dt)) / dt,
// averaged across the given streams (e.g. across days). Rates in 1/s.
struct StepCurve {
  double dt = 0.0;
  std::vector<double> values;
};
StepCurve empirical_intensity(const std::vector<EventStream>& streams, double dt);

// Realized quadratic variation C_T(delta) of the tick path, for each horizon
// (row) and sampling interval (column).
std::vector<std::vector<double>> signature_surface(const PricePath& path,
                                                   const std::vector<double>& deltas,
                                                   const std::vector<double>& horizons);

}  // namespace oflow
