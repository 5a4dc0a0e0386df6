#include "oflow/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <set>
#include <string>

#include "oflow/simulate.hpp"
#include "oflow/thread_pool.hpp"

namespace oflow {

double StepSeries::at(double t) const {
  if (times.empty() || times.size() != values.size()) {
    throw DataError("StepSeries: empty or inconsistent series");
  }
  if (t < times.front()) {
    throw DataError("StepSeries: no coverage at requested time");
  }
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  return values[static_cast<std::size_t>(it - times.begin()) - 1];
}

StepSeries constant_series(double from, double value) {
  StepSeries s;
  s.times = {from};
  s.values = {value};
  return s;
}

MarketPath make_market(const HawkesSpec& sim_spec, const TimeWindow& window,
                       std::uint64_t seed, const StepSeries& spread,
                       const StepSeries& eta) {
  MarketPath market;
  market.flow = simulate_hawkes(sim_spec, window, seed);
  market.spread = spread;
  market.eta = eta;
  market.window = window;
  return market;
}

StepSeries session_profile(const TimeWindow& window, double open_value, double mid_value,
                           double late_value, double open_fraction, double late_fraction) {
  if (!(open_fraction > 0.0) || !(late_fraction > 0.0) ||
      open_fraction + late_fraction >= 1.0) {
    throw ConfigError("session_profile: fractions must be positive and sum below 1");
  }
  const double len = window.length();
  StepSeries s;
  s.times = {window.begin, window.begin + open_fraction * len,
             window.end - late_fraction * len};
  s.values = {open_value, mid_value, late_value};
  return s;
}

namespace {

struct FlowJump {
  double time;
  double signed_volume;
};

std::vector<FlowJump> merge_flow(const MarketPath& market, double default_volume) {
  std::vector<FlowJump> flow;
  for (const auto& st : market.flow) {
    st.validate();
    const double sign = st.side == Side::Buy ? 1.0 : -1.0;
    for (std::size_t i = 0; i < st.times.size(); ++i) {
      const double vol = st.sizes.empty() ? default_volume : st.sizes[i];
      flow.push_back({st.times[i], sign * vol});
    }
  }
  std::stable_sort(flow.begin(), flow.end(),
                   [](const FlowJump& a, const FlowJump& b) { return a.time < b.time; });
  return flow;
}

void check_schedule_against_market(const Schedule& s, const MarketPath& m) {
  if (s.times.empty() || s.times.size() != s.trades.size()) {
    throw ConfigError("shortfall: schedule grid and trades are inconsistent");
  }
  double prev = -std::numeric_limits<double>::infinity();
  for (double t : s.times) {
    if (!(t > prev)) throw ConfigError("shortfall: schedule times must be increasing");
    if (t < m.window.begin - 1e-9 || t > m.window.end + 1e-9) {
      throw ConfigError("shortfall: schedule grid point outside the market window");
    }
    prev = t;
  }
}

struct CostSweep {
  CostBreakdown totals;
  std::vector<double> running;  // running total after each grid point
};

// One left-to-right pass: own-impact propagator by exponential recursion,
// market-flow impact by the same recursion over the merged jumps (left
// limits at trade times), plus spread and temporary components.
CostSweep sweep_costs(const Schedule& s, const MarketPath& m, const ImpactParams& p) {
  p.validate();
  check_schedule_against_market(s, m);
  const std::vector<FlowJump> flow = merge_flow(m, p.m1);
  const double mu = p.mu;
  const double rho = p.rho;

  CostSweep out;
  out.running.reserve(s.times.size());

  double own_transient = 0.0;  // sum of xi e^{-rho (t - t')} over past own trades
  double own_volume = 0.0;     // sum of past own trades
  double mkt_transient = 0.0;
  double mkt_volume = 0.0;
  double prev_time = s.times.front();
  std::size_t cursor = 0;

  for (std::size_t k = 0; k < s.times.size(); ++k) {
    const double t = s.times[k];
    const double xi = s.trades[k];
    own_transient *= std::exp(-rho * (t - prev_time));
    double flow_time = prev_time;
    while (cursor < flow.size() && flow[cursor].time < t) {
      mkt_transient *= std::exp(-rho * (flow[cursor].time - flow_time));
      flow_time = flow[cursor].time;
      mkt_transient += flow[cursor].signed_volume;
      mkt_volume += flow[cursor].signed_volume;
      ++cursor;
    }
    mkt_transient *= std::exp(-rho * (t - flow_time));
    prev_time = t;

    if (xi != 0.0) {
      const double own_impact = (1.0 - mu) * own_transient + mu * own_volume;
      const double mkt_impact = (1.0 - mu) * mkt_transient + mu * mkt_volume;
      out.totals.propagator_cost += xi * own_impact + 0.5 * xi * xi;
      out.totals.market_flow_cost += xi * mkt_impact;
      out.totals.spread_cost += std::abs(xi) * m.spread.at(t) / 2.0;
      out.totals.temporary_cost += m.eta.at(t) * xi * xi;
    }
    own_transient += xi;
    own_volume += xi;

    // Market jumps exactly at the trade time impact only later trades.
    while (cursor < flow.size() && flow[cursor].time == t) {
      mkt_transient += flow[cursor].signed_volume;
      mkt_volume += flow[cursor].signed_volume;
      ++cursor;
    }

    out.totals.total = out.totals.propagator_cost + out.totals.market_flow_cost +
                       out.totals.spread_cost + out.totals.temporary_cost;
    out.running.push_back(out.totals.total);
  }
  return out;
}

double finite_mean(const std::vector<double>& xs, Aggregate* agg) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double x : xs) {
    if (std::isfinite(x)) {
      sum += x;
      ++n;
    }
  }
  const double mean = n > 0 ? sum / static_cast<double>(n) : std::nan("");
  if (agg != nullptr) {
    agg->n = n;
    agg->mean = mean;
    double ss = 0.0;
    for (double x : xs) {
      if (std::isfinite(x)) ss += (x - mean) * (x - mean);
    }
    agg->sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
  }
  return mean;
}

// Running cost resampled at shared grid times (step function of time).
std::vector<double> resample_running(const std::vector<double>& schedule_times,
                                     const std::vector<double>& running,
                                     const std::vector<double>& grid) {
  std::vector<double> out;
  out.reserve(grid.size());
  for (double t : grid) {
    const auto it = std::upper_bound(schedule_times.begin(), schedule_times.end(),
                                     t + 1e-12);
    const auto idx = static_cast<std::size_t>(it - schedule_times.begin());
    out.push_back(idx == 0 ? 0.0 : running[idx - 1]);
  }
  return out;
}

}  // namespace

CostBreakdown shortfall(const Schedule& schedule, const MarketPath& market,
                        const ImpactParams& params) {
  return sweep_costs(schedule, market, params).totals;
}

double propagator_cost_direct(const Schedule& schedule, const ImpactParams& params) {
  params.validate();
  double cost = 0.0;
  for (std::size_t j = 0; j < schedule.trades.size(); ++j) {
    const double xj = schedule.trades[j];
    cost += 0.5 * xj * xj;
    for (std::size_t i = 0; i < j; ++i) {
      cost += xj * schedule.trades[i] *
              params.propagator(schedule.times[j] - schedule.times[i]);
    }
  }
  return cost;
}

std::vector<double> cumulative_cost_curve(const Schedule& schedule, const MarketPath& market,
                                          const ImpactParams& params) {
  return sweep_costs(schedule, market, params).running;
}

BacktestReport run_comparison(const ComparisonConfig& config,
                              const std::vector<MarketPath>& markets) {
  config.params.validate();
  if (!(config.x0 > 0.0)) throw ConfigError("run_comparison: x0 must be positive");
  if (config.strategies.empty()) throw ConfigError("run_comparison: no strategies");
  if (markets.empty()) throw DataError("run_comparison: no market paths");
  const TimeWindow window = markets.front().window;
  for (const auto& m : markets) {
    if (std::abs(m.window.begin - window.begin) > 1e-9 ||
        std::abs(m.window.end - window.end) > 1e-9) {
      throw ConfigError("run_comparison: markets must share the session window");
    }
  }

  const std::size_t n_strat = config.strategies.size();
  const std::size_t n_runs = markets.size();
  const std::vector<double> grid = make_uniform_grid(window, config.grid_intervals);

  VolumeProfile profile = config.profile;
  if (profile.factors.empty()) {
    profile.bucket_width = window.length() / static_cast<double>(config.grid_intervals);
    profile.volumes.assign(config.grid_intervals, 1.0);
    profile.factors.assign(config.grid_intervals, 1.0);
  }

  BacktestReport report;
  report.strategy_names.reserve(n_strat);
  std::set<std::string> seen;
  for (const auto& v : config.strategies) {
    const std::string name = v.name.empty() ? to_string(v.kind) : v.name;
    if (!seen.insert(name).second) {
      throw ConfigError("run_comparison: duplicate strategy name '" + name + "'");
    }
    report.strategy_names.push_back(name);
  }

  report.run_costs.assign(n_runs, std::vector<CostBreakdown>(n_strat));
  std::vector<std::vector<std::vector<double>>> curves(
      n_runs, std::vector<std::vector<double>>(n_strat));

  parallel_for(n_runs, config.threads, [&](std::size_t r) {
    const MarketPath& market = markets[r];
    for (std::size_t v = 0; v < n_strat; ++v) {
      const StrategyVariant& variant = config.strategies[v];
      Schedule schedule;
      switch (variant.kind) {
        case ScheduleKind::Twap:
          schedule = twap(config.x0, window, grid);
          break;
        case ScheduleKind::Ow:
          schedule = ow(config.x0, window, config.params.rho, grid);
          break;
        case ScheduleKind::Vwap:
          schedule = vwap(config.x0, window, profile);
          break;
        case ScheduleKind::Optimal:
          schedule = discretize_optimal(config.x0, variant.model, config.params,
                                        market.flow, grid, variant.scale);
          break;
      }
      const CostSweep sweep = sweep_costs(schedule, market, config.params);
      report.run_costs[r][v] = sweep.totals;
      curves[r][v] = resample_running(schedule.times, sweep.running, grid);
    }
  });

  // Relative improvement of strategy 0 against each other strategy.
  report.relative_improvement.assign(n_strat > 1 ? n_strat - 1 : 0,
                                     std::vector<double>(n_runs, std::nan("")));
  for (std::size_t r = 0; r < n_runs; ++r) {
    const double subject = report.run_costs[r][0].total;
    for (std::size_t b = 1; b < n_strat; ++b) {
      const double bench = report.run_costs[r][b].total;
      if (bench != 0.0) {
        report.relative_improvement[b - 1][r] = (bench - subject) / bench;
      }
    }
  }

  report.cost_agg.assign(n_strat, Aggregate{});
  for (std::size_t v = 0; v < n_strat; ++v) {
    std::vector<double> totals(n_runs);
    for (std::size_t r = 0; r < n_runs; ++r) totals[r] = report.run_costs[r][v].total;
    finite_mean(totals, &report.cost_agg[v]);
  }

  report.r_agg.assign(report.relative_improvement.size(), Aggregate{});
  report.r_ci.clear();
  for (std::size_t b = 0; b < report.relative_improvement.size(); ++b) {
    finite_mean(report.relative_improvement[b], &report.r_agg[b]);
    std::vector<double> finite;
    for (double x : report.relative_improvement[b]) {
      if (std::isfinite(x)) finite.push_back(x);
    }
    if (finite.empty()) {
      MeanCi missing;
      missing.mean = std::nan("");
      missing.lo = std::nan("");
      missing.hi = std::nan("");
      report.r_ci.push_back(missing);
    } else {
      report.r_ci.push_back(bootstrap_mean_ci(finite, config.ci_level,
                                              config.ci_resamples, config.ci_seed));
    }
  }

  report.curve_times = grid;
  report.mean_cum_diff.assign(report.relative_improvement.size(),
                              std::vector<double>(grid.size(), 0.0));
  for (std::size_t b = 1; b < n_strat; ++b) {
    auto& diff = report.mean_cum_diff[b - 1];
    for (std::size_t r = 0; r < n_runs; ++r) {
      for (std::size_t g = 0; g < grid.size(); ++g) {
        diff[g] += curves[r][b][g] - curves[r][0][g];
      }
    }
    for (double& d : diff) d /= static_cast<double>(n_runs);
  }
  return report;
}

}  // namespace oflow
