#pragma once

// Execution-cost primitives estimated from limit-order-book snapshots:
// non-empty ladder construction, walk-the-book cost, the smoothed two-level
// cost approximation, the temporary-impact slope fit, time-weighted spreads,
// and the kernel-implied resilience approximation.

#include <vector>

#include "oflow/common.hpp"
#include "oflow/events.hpp"

namespace oflow {

// One side of the book restricted to its non-empty levels. Offsets are in
// ticks from the touch (offset 0 = best level), volumes in MWh.
struct BookLadder {
  std::vector<double> offsets;  // strictly increasing, offsets[0] == 0
  std::vector<double> volumes;  // strictly positive
  std::vector<double> cum;      // cumulative volumes, strictly increasing

  std::size_t depth() const { return offsets.size(); }
  void validate() const;
};

// Collapse raw snapshot levels (possibly containing empty ones) to the ladder
// of non-empty levels. Throws DataError when every level is empty.
BookLadder build_ladder(const BookSnapshot& snapshot);
BookLadder build_ladder(const std::vector<BookLevelRow>& levels);

// Per-unit cost, in ticks per MWh, of a market order of size `size` consuming
// the ladder level by level. Volume beyond the deepest level is priced at the
// deepest offset plus `exhaustion_penalty_ticks`.
double walk_book_cost(const BookLadder& ladder, double size,
                      double exhaustion_penalty_ticks = 2.0);

// Smoothed two-level approximation of the expected per-unit cost over a
// collection of snapshot ladders: for each consecutive level pair, the cost
// of filling the cumulative bulk at the shallower mean offset and the
// remainder at the deeper mean offset, weighted by the probability of the
// bracket event under a bivariate Gaussian kernel density estimate of the
// cumulative volumes (per-dimension Silverman bandwidth with a relative
// floor). Degenerate bandwidths for a pair fall back to empirical
// frequencies; `kde_degenerate` reports whether that happened anywhere.
struct ApproxCostResult {
  double cost = 0.0;  // ticks per MWh
  bool kde_degenerate = false;
};
ApproxCostResult approx_cost(const std::vector<BookLadder>& snapshots, double size,
                             double exhaustion_penalty_ticks = 2.0);

// Through-origin least squares of per-unit cost against order size:
// cost = eta * size + error. `sigma` is the residual standard deviation and
// `se` the standard error of the slope.
struct EtaFit {
  double eta = 0.0;
  double sigma = 0.0;
  double se = 0.0;
};
EtaFit fit_eta(const std::vector<double>& sizes, const std::vector<double>& costs);

// Duration-weighted average bid-ask spread over [interval.begin,
// interval.end), treating quotes as right-open piecewise-constant. Requires a
// quote at or before the interval start.
double time_weighted_bas(const QuoteSeries& quotes, const TimeWindow& interval);

// Spread averaged per consecutive sub-interval of width dt (default 6 s)
// covering `window`; the last value covers the remainder when dt does not
// divide the window.
std::vector<double> bas_curve(const QuoteSeries& quotes, const TimeWindow& window,
                              double dt = 6.0);

// Resilience approximation from a fitted kernel: rho = (1 - alpha/beta) /
// (T/2), where T is the session length in seconds.
double resilience_from_kernel(double alpha, double beta, double session_length);

// Price-impact parameters shared by the strategy and backtest layers. The
// trader's own permanent fraction equals the market's (epsilon == mu).
struct ImpactParams {
  double mu = 0.5;       // permanent fraction of each unit price jump
  double rho = 1e-4;     // resilience of the transient part, 1/s
  double eta = 0.0;      // temporary impact factor, price per MWh^2
  double m1 = 1.0;       // mean order mark, MWh
  double epsilon = 0.5;  // trader's permanent fraction, kept equal to mu

  // Decay of a unit trade's price impact after elapsed time u >= 0.
  double propagator(double u) const;
  void validate() const;
};

ImpactParams make_impact_params(double mu, double rho, double eta, double m1 = 1.0);

}  // namespace oflow
