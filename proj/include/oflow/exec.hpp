#pragma once

// Liquidation schedules: the closed-form optimal inventory target driven by
// the order-flow imbalance and the transient price deviation, its discretized
// trading proxy, and the TWAP / OW / VWAP benchmarks.

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "oflow/common.hpp"
#include "oflow/hawkes.hpp"
#include "oflow/impact.hpp"

namespace oflow {

enum class ScheduleKind { Optimal, Twap, Vwap, Ow };
std::string to_string(ScheduleKind kind);

// A liquidation schedule on a time grid. `inventory[k]` is the position held
// immediately AFTER the trade at `times[k]`; trades are signed (negative =
// sell). Every schedule closes exactly: inventory.back() == 0.
struct Schedule {
  ScheduleKind kind = ScheduleKind::Twap;
  double scale = 0.0;  // response scale; meaningful for Optimal only
  TimeWindow window;
  double x0 = 0.0;
  std::vector<double> times;
  std::vector<double> trades;
  std::vector<double> inventory;
  std::vector<double> kappa;      // imbalance state at each grid point (Optimal)
  std::vector<double> deviation;  // transient price deviation at each grid point

  void validate() const;
};

// Uniform grid of n_intervals+1 points spanning the window, endpoints exact.
std::vector<double> make_uniform_grid(const TimeWindow& window, std::size_t n_intervals);

// The pair (zeta, omega) with zeta(y) = (1 - e^-y)/y and
// omega(y) = (e^-y - 1 + y)/y^2, switching to truncated Taylor series for
// |y| < 1e-6. Both paths are exposed for cross-validation.
std::pair<double, double> zeta_omega(double y);
double zeta_closed(double y);
double zeta_series(double y);
double omega_closed(double y);
double omega_series(double y);

// Market state observed by the strategy at one instant.
struct MarketState {
  double fundamental = 0.0;  // S_t, unused by the target formula
  double deviation = 0.0;    // transient price deviation D_t
  double inventory = 0.0;    // X_t
  ExecState exec;            // kappa/gamma of the symmetric order-flow model
};

// Closed-form optimal inventory target at time-to-horizon h, with the
// response scale multiplying both the deviation and the imbalance:
//   X* = -(1+rho h)/(1-mu) * s * D_t
//        + m1/(2 rho (1-mu)) * (2+rho h) *
//          [1 + rho h/(2+rho h) * (zeta(eta h) + mu rho h omega(eta h))] * s * kappa_t
// where eta = beta - (alpha_s - alpha_c) is the imbalance mean reversion.
double optimal_target(const MarketState& state, const ImpactParams& params,
                      const SymmetricKernel& kernel, double h, double scale);

// Transient price deviation produced by signed order-flow jumps: each jump of
// signed volume v contributes (1-mu) * v * e^{-rho (t - tau)}. Maintained
// incrementally so long histories stay O(1) per update.
class DeviationTracker {
 public:
  explicit DeviationTracker(const ImpactParams& params, double t0 = 0.0);
  void advance(double t);              // decay up to t >= current time
  void add_jump(double signed_volume); // jump at the current time
  double value() const { return value_; }
  double time() const { return last_; }

 private:
  double rho_;
  double transient_fraction_;
  double value_ = 0.0;
  double last_ = 0.0;
};

// Direct-sum evaluation over a full jump history (times ascending).
double transient_deviation(const std::vector<double>& jump_times,
                           const std::vector<double>& signed_volumes, double t,
                           const ImpactParams& params);

// Benchmarks. Grids must start at window.begin and end at window.end.
Schedule twap(double x0, const TimeWindow& window, const std::vector<double>& grid);
Schedule ow(double x0, const TimeWindow& window, double rho, const std::vector<double>& grid);
// VWAP trades at each bucket's right endpoint in proportion to the profile.
Schedule vwap(double x0, const TimeWindow& window, const VolumeProfile& profile);

// Discretized optimal proxy: at each grid time trade
// (target - inventory)/(2 + rho h), with the imbalance and the market-driven
// part of the deviation scaled by `scale`; the trader's own-impact deviation
// always enters (scale 0 therefore reproduces the OW block scheme on the same
// grid). A forced terminal block closes any residual inventory. `market`
// holds the realized buy/sell streams (possibly empty) driving kappa and the
// market deviation.
Schedule discretize_optimal(double x0, const HawkesSpec& spec, const ImpactParams& params,
                            const std::vector<EventStream>& market,
                            const std::vector<double>& grid, double scale);

}  // namespace oflow
