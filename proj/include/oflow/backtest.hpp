#pragma once

// Execution-shortfall accounting and comparative transaction-cost analysis:
// per-schedule cost breakdowns over a realized or simulated market path, and
// Monte-Carlo comparisons of the optimal schedule against benchmarks.

#include <cstdint>
#include <string>
#include <vector>

#include "oflow/common.hpp"
#include "oflow/exec.hpp"
#include "oflow/impact.hpp"
#include "oflow/stats.hpp"

namespace oflow {

// Right-open piecewise-constant curve: values[i] applies on
// [times[i], times[i+1]), the last value onward.
struct StepSeries {
  std::vector<double> times;
  std::vector<double> values;

  double at(double t) const;  // throws DataError when t precedes coverage
};
StepSeries constant_series(double from, double value);

// One market realization: buy/sell order-flow streams plus the spread and
// temporary-impact profiles the trader faces.
struct MarketPath {
  std::vector<EventStream> flow;  // [0] = buys, [1] = sells (either may be empty)
  StepSeries spread;              // full bid-ask spread s_t (cost uses s_t/2)
  StepSeries eta;                 // temporary impact factor eta(t)
  TimeWindow window;
};

// Simulate a market path from an order-flow model and cost profiles.
MarketPath make_market(const HawkesSpec& sim_spec, const TimeWindow& window,
                       std::uint64_t seed, const StepSeries& spread,
                       const StepSeries& eta);

// Three-level session profile: `open_value` on the opening fraction of the
// window, `late_value` on the closing fraction, `mid_value` between.
StepSeries session_profile(const TimeWindow& window, double open_value, double mid_value,
                           double late_value, double open_fraction = 0.125,
                           double late_fraction = 0.125);

struct CostBreakdown {
  double propagator_cost = 0.0;   // own transient+permanent impact incl. self blocks
  double market_flow_cost = 0.0;  // impact of other participants' flow on fills
  double spread_cost = 0.0;       // half-spread paid on each child order
  double temporary_cost = 0.0;    // instantaneous eta(t) xi^2 component
  double total = 0.0;             // exact sum of the four components
};

// Execution shortfall of a schedule over one market path. The propagator
// component is evaluated with the O(n) exponential recursion.
CostBreakdown shortfall(const Schedule& schedule, const MarketPath& market,
                        const ImpactParams& params);

// O(n^2) pairwise evaluation of the own-impact propagator component
// (including the xi^2/2 self terms); oracle for the recursion.
double propagator_cost_direct(const Schedule& schedule, const ImpactParams& params);

// Running total cost after each grid point (same accounting as shortfall).
std::vector<double> cumulative_cost_curve(const Schedule& schedule, const MarketPath& market,
                                          const ImpactParams& params);

// One strategy entry in a comparison. Benchmarks ignore `model` and `scale`.
struct StrategyVariant {
  ScheduleKind kind = ScheduleKind::Twap;
  double scale = 1.0;
  HawkesSpec model;  // order-flow model used by the optimal strategy
  std::string name;  // defaults to the kind name when empty
};

struct ComparisonConfig {
  double x0 = 250.0;
  std::size_t grid_intervals = 480;
  ImpactParams params;
  std::vector<StrategyVariant> strategies;  // [0] is the subject of the r metrics
  VolumeProfile profile;                    // for VWAP; empty -> uniform
  double ci_level = 0.95;
  int ci_resamples = 2000;
  std::uint64_t ci_seed = 2024;
  unsigned threads = 1;
};

struct Aggregate {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t n = 0;
};

struct BacktestReport {
  std::vector<std::string> strategy_names;
  // run_costs[run][strategy]
  std::vector<std::vector<CostBreakdown>> run_costs;
  // relative improvement of strategies[0] vs each other strategy:
  // r[bench-1][run] = (total_bench - total_0) / total_bench; NaN = undefined
  // (benchmark cost zero), excluded from aggregates.
  std::vector<std::vector<double>> relative_improvement;
  std::vector<Aggregate> cost_agg;  // per strategy, of total cost
  std::vector<Aggregate> r_agg;     // per benchmark
  std::vector<MeanCi> r_ci;         // bootstrap CI of mean r per benchmark
  // Mean over runs of (cumulative benchmark cost - cumulative subject cost)
  // at shared grid times.
  std::vector<double> curve_times;
  std::vector<std::vector<double>> mean_cum_diff;  // [bench-1][grid point]
};

// Build every strategy's schedule on each market, price them, and aggregate.
// All markets must share the window extent.
BacktestReport run_comparison(const ComparisonConfig& config,
                              const std::vector<MarketPath>& markets);

}  // namespace oflow
