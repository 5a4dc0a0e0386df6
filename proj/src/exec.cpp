#include "oflow/exec.hpp"

#include <quadmath.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

namespace oflow {

std::string to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::Optimal: return "optimal";
    case ScheduleKind::Twap: return "twap";
    case ScheduleKind::Vwap: return "vwap";
    case ScheduleKind::Ow: return "ow";
  }
  return "unknown";
}

void Schedule::validate() const {
  const std::size_t n = times.size();
  if (n == 0) throw ConfigError("Schedule: empty grid");
  if (trades.size() != n || inventory.size() != n || kappa.size() != n ||
      deviation.size() != n) {
    throw ConfigError("Schedule: column lengths differ");
  }
  if (!(x0 > 0.0)) throw ConfigError("Schedule: x0 must be positive");
  double prev = window.begin - 1e-9;
  for (double t : times) {
    if (!(t > prev)) throw ConfigError("Schedule: grid times must be increasing");
    if (t < window.begin - 1e-9 || t > window.end + 1e-9) {
      throw ConfigError("Schedule: grid time outside the window");
    }
    prev = t;
  }
  double sum = 0.0;
  double inv = x0;
  for (std::size_t k = 0; k < n; ++k) {
    sum += trades[k];
    inv += trades[k];
    if (std::abs(inv - inventory[k]) > 1e-9) {
      throw ConfigError("Schedule: inventory path inconsistent with trades");
    }
  }
  if (std::abs(sum + x0) > 1e-9) throw ConfigError("Schedule: trades do not sum to -x0");
  if (std::abs(inventory.back()) > 1e-9) {
    throw ConfigError("Schedule: terminal inventory not zero");
  }
}

std::vector<double> make_uniform_grid(const TimeWindow& window, std::size_t n_intervals) {
  if (n_intervals == 0) throw ConfigError("make_uniform_grid: need at least one interval");
  if (!(window.end > window.begin)) {
    throw ConfigError("make_uniform_grid: window must have positive length");
  }
  std::vector<double> grid(n_intervals + 1);
  const double len = window.length();
  for (std::size_t k = 0; k <= n_intervals; ++k) {
    grid[k] = window.begin + len * (static_cast<double>(k) / static_cast<double>(n_intervals));
  }
  grid.front() = window.begin;
  grid.back() = window.end;
  return grid;
}

double zeta_closed(double y) {
  if (y == 0.0) return 1.0;
  const __float128 yq = y;
  return static_cast<double>(-expm1q(-yq) / yq);
}

double zeta_series(double y) { return 1.0 - y / 2.0 + y * y / 6.0; }

double omega_closed(double y) {
  if (y == 0.0) return 0.5;
  // (expm1(-y) + y) / y^2 cancels to y^2/2 as y -> 0, so the quotient
  // amplifies expm1's own rounding by 1/y: in plain double the result is only
  // good to ~1e-16/|y| absolute, far off the 1e-12 the strategy's
  // small-mean-reversion regime needs. Evaluating the same closed form in
  // quad precision keeps the final double correctly rounded for every y.
  const __float128 yq = y;
  return static_cast<double>((expm1q(-yq) + yq) / (yq * yq));
}

double omega_series(double y) { return 0.5 - y / 6.0 + y * y / 24.0; }

std::pair<double, double> zeta_omega(double y) {
  if (std::abs(y) < 1e-6) return {zeta_series(y), omega_series(y)};
  return {zeta_closed(y), omega_closed(y)};
}

double optimal_target(const MarketState& state, const ImpactParams& params,
                      const SymmetricKernel& kernel, double h, double scale) {
  params.validate();
  if (!(params.mu < 1.0)) {
    throw ConfigError("optimal_target: mu must be below 1 (the target divides by 1 - mu)");
  }
  if (h < 0.0) throw ConfigError("optimal_target: time-to-horizon must be non-negative");
  if (scale < 0.0 || scale > 1.0) {
    throw ConfigError("optimal_target: response scale must lie in [0, 1]");
  }
  const double rho = params.rho;
  const double mu = params.mu;
  const double eta = kernel.mean_reversion();
  const auto [zeta, omega] = zeta_omega(eta * h);

  const double dev_term = -(1.0 + rho * h) / (1.0 - mu) * scale * state.deviation;
  const double kappa_coef = params.m1 / (2.0 * rho * (1.0 - mu)) * (2.0 + rho * h) *
                            (1.0 + rho * h / (2.0 + rho * h) *
                                       (zeta + mu * rho * h * omega));
  return dev_term + kappa_coef * scale * state.exec.kappa;
}

DeviationTracker::DeviationTracker(const ImpactParams& params, double t0)
    : rho_(params.rho), transient_fraction_(1.0 - params.mu), last_(t0) {
  params.validate();
}

void DeviationTracker::advance(double t) {
  if (t < last_) throw ConfigError("DeviationTracker: cannot advance backwards");
  value_ *= std::exp(-rho_ * (t - last_));
  last_ = t;
}

void DeviationTracker::add_jump(double signed_volume) {
  value_ += transient_fraction_ * signed_volume;
}

double transient_deviation(const std::vector<double>& jump_times,
                           const std::vector<double>& signed_volumes, double t,
                           const ImpactParams& params) {
  if (jump_times.size() != signed_volumes.size()) {
    throw ConfigError("transient_deviation: jump arrays must have equal length");
  }
  DeviationTracker tracker(params, jump_times.empty() ? t : std::min(jump_times.front(), t));
  for (std::size_t i = 0; i < jump_times.size(); ++i) {
    if (i > 0 && jump_times[i] < jump_times[i - 1]) {
      throw DataError("transient_deviation: jumps must be time-ordered");
    }
    if (jump_times[i] > t) break;
    tracker.advance(jump_times[i]);
    tracker.add_jump(signed_volumes[i]);
  }
  tracker.advance(t);
  return tracker.value();
}

namespace {

void check_grid(const std::vector<double>& grid, const TimeWindow& window,
                bool require_begin) {
  if (grid.empty()) throw ConfigError("schedule grid is empty");
  double prev = -std::numeric_limits<double>::infinity();
  for (double t : grid) {
    if (!(t > prev)) throw ConfigError("schedule grid must be strictly increasing");
    if (t < window.begin - 1e-9 || t > window.end + 1e-9) {
      throw ConfigError("schedule grid point outside the window");
    }
    prev = t;
  }
  if (require_begin && std::abs(grid.front() - window.begin) > 1e-9) {
    throw ConfigError("schedule grid must start at the window begin");
  }
  if (std::abs(grid.back() - window.end) > 1e-9) {
    throw ConfigError("schedule grid must include the terminal time");
  }
}

Schedule finish_schedule(Schedule s) {
  // Force exact liquidation: the terminal trade closes whatever remains, so
  // the final inventory is identically zero.
  double inv = s.x0;
  for (std::size_t k = 0; k + 1 < s.trades.size(); ++k) inv += s.trades[k];
  s.trades.back() = -inv;
  s.inventory.assign(s.trades.size(), 0.0);
  double run = s.x0;
  for (std::size_t k = 0; k < s.trades.size(); ++k) {
    run += s.trades[k];
    s.inventory[k] = run;
  }
  s.inventory.back() = 0.0;
  if (s.kappa.empty()) s.kappa.assign(s.trades.size(), 0.0);
  if (s.deviation.empty()) s.deviation.assign(s.trades.size(), 0.0);
  s.validate();
  return s;
}

}  // namespace

Schedule twap(double x0, const TimeWindow& window, const std::vector<double>& grid) {
  if (!(x0 > 0.0)) throw ConfigError("twap: x0 must be positive");
  check_grid(grid, window, /*require_begin=*/true);
  Schedule s;
  s.kind = ScheduleKind::Twap;
  s.window = window;
  s.x0 = x0;
  s.times = grid;
  s.trades.assign(grid.size(), 0.0);
  const double total = window.length();
  for (std::size_t k = 1; k < grid.size(); ++k) {
    s.trades[k] = -x0 * (grid[k] - grid[k - 1]) / total;
  }
  return finish_schedule(std::move(s));
}

Schedule ow(double x0, const TimeWindow& window, double rho, const std::vector<double>& grid) {
  if (!(x0 > 0.0)) throw ConfigError("ow: x0 must be positive");
  if (!(rho > 0.0)) throw ConfigError("ow: rho must be positive");
  check_grid(grid, window, /*require_begin=*/true);
  Schedule s;
  s.kind = ScheduleKind::Ow;
  s.window = window;
  s.x0 = x0;
  s.times = grid;
  s.trades.assign(grid.size(), 0.0);
  const double block = x0 / (2.0 + rho * window.length());
  s.trades[0] = -block;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    s.trades[k] = -block * rho * (grid[k] - grid[k - 1]);
  }
  // finish_schedule turns the last interval's trade into rate + final block.
  if (grid.size() >= 2) {
    s.trades.back() -= block;
  }
  return finish_schedule(std::move(s));
}

Schedule vwap(double x0, const TimeWindow& window, const VolumeProfile& profile) {
  if (!(x0 > 0.0)) throw ConfigError("vwap: x0 must be positive");
  const std::size_t n = profile.factors.size();
  if (n == 0) throw ConfigError("vwap: empty volume profile");
  if (!(profile.bucket_width > 0.0)) throw ConfigError("vwap: bucket width must be positive");
  const double covered = profile.bucket_width * static_cast<double>(n);
  if (std::abs(covered - window.length()) > 1e-6 * std::max(1.0, window.length())) {
    throw ConfigError("vwap: volume profile does not span the window");
  }
  Schedule s;
  s.kind = ScheduleKind::Vwap;
  s.window = window;
  s.x0 = x0;
  s.times.resize(n + 1);
  s.trades.assign(n + 1, 0.0);
  s.times[0] = window.begin;
  for (std::size_t k = 1; k <= n; ++k) {
    s.times[k] = window.begin + profile.bucket_width * static_cast<double>(k);
    s.trades[k] = -x0 / static_cast<double>(n) * profile.factors[k - 1];
  }
  s.times.back() = window.end;
  return finish_schedule(std::move(s));
}

Schedule discretize_optimal(double x0, const HawkesSpec& spec, const ImpactParams& params,
                            const std::vector<EventStream>& market,
                            const std::vector<double>& grid, double scale) {
  spec.validate();
  params.validate();
  if (!(x0 > 0.0)) throw ConfigError("discretize_optimal: x0 must be positive");
  if (!(params.mu < 1.0)) throw ConfigError("discretize_optimal: mu must be below 1");
  if (spec.kernel.P != 2 || market.size() != 2) {
    throw ConfigError("discretize_optimal: needs the bivariate model with buy/sell streams");
  }
  if (scale < 0.0 || scale > 1.0) {
    throw ConfigError("discretize_optimal: response scale must lie in [0, 1]");
  }
  const TimeWindow window = market[0].window;
  check_grid(grid, window, /*require_begin=*/false);
  const SymmetricKernel kernel = as_symmetric(spec.kernel);
  const double rho = params.rho;

  // Merge the two market streams into one signed-flow sequence.
  struct FlowEvent {
    double time;
    int component;  // 0 = buy, 1 = sell
    double volume;  // MWh
  };
  std::vector<FlowEvent> flow;
  flow.reserve(market[0].size() + market[1].size());
  for (const auto& st : market) {
    st.validate();
    const int comp = st.side == Side::Buy ? 0 : 1;
    for (std::size_t i = 0; i < st.times.size(); ++i) {
      const double vol = st.sizes.empty() ? params.m1 : st.sizes[i];
      flow.push_back({st.times[i], comp, vol});
    }
  }
  std::stable_sort(flow.begin(), flow.end(), [](const FlowEvent& a, const FlowEvent& b) {
    if (a.time != b.time) return a.time < b.time;
    return a.component < b.component;
  });

  Schedule s;
  s.kind = ScheduleKind::Optimal;
  s.scale = scale;
  s.window = window;
  s.x0 = x0;
  s.times = grid;
  const std::size_t n = grid.size();
  s.trades.assign(n, 0.0);
  s.inventory.assign(n, 0.0);
  s.kappa.assign(n, 0.0);
  s.deviation.assign(n, 0.0);

  ExecState exec;
  exec.last_time = window.begin;
  exec = advance_exec_state(spec, exec, {}, window.begin);
  DeviationTracker market_dev(params, window.begin);
  double own_dev = 0.0;       // transient deviation from the trader's own trades
  double inventory = x0;      // pre-trade inventory at the current grid point
  double prev_time = window.begin;
  std::size_t cursor = 0;
  std::vector<MarkedEvent> batch;

  for (std::size_t k = 0; k < n; ++k) {
    const double t = grid[k];
    // Advance through market events strictly before t (grid decisions see
    // left limits), then decay the states up to t. The trader's own
    // deviation uses the first-order decay factor matching the discrete OW
    // block mechanics, which makes the scale-0 schedule coincide with ow().
    batch.clear();
    while (cursor < flow.size() && flow[cursor].time < t) {
      const FlowEvent& ev = flow[cursor];
      batch.push_back({ev.time, ev.component});
      market_dev.advance(ev.time);
      market_dev.add_jump(ev.component == 0 ? ev.volume : -ev.volume);
      ++cursor;
    }
    exec = advance_exec_state(spec, exec, batch, t);
    market_dev.advance(t);
    own_dev *= std::max(0.0, 1.0 - rho * (t - prev_time));
    prev_time = t;

    s.kappa[k] = exec.kappa;
    s.deviation[k] = own_dev + market_dev.value();

    double trade;
    if (k + 1 == n) {
      trade = -inventory;  // forced terminal block
    } else {
      const double h = window.end - t;
      MarketState state;
      state.inventory = inventory;
      state.deviation = own_dev + scale * market_dev.value();
      state.exec = exec;
      state.exec.kappa = scale * exec.kappa;
      const double target = optimal_target(state, params, kernel, h, 1.0);
      trade = (target - inventory) / (2.0 + rho * h);
    }
    s.trades[k] = trade;
    inventory += trade;
    own_dev += (1.0 - params.mu) * trade;
    s.inventory[k] = inventory;

    // Absorb any market events falling exactly on the grid time so they are
    // visible to later decisions.
    batch.clear();
    while (cursor < flow.size() && flow[cursor].time == t) {
      const FlowEvent& ev = flow[cursor];
      batch.push_back({ev.time, ev.component});
      market_dev.add_jump(ev.component == 0 ? ev.volume : -ev.volume);
      ++cursor;
    }
    if (!batch.empty()) exec = advance_exec_state(spec, exec, batch, t);
  }
  s.inventory.back() = 0.0;
  s.validate();
  return s;
}

}  // namespace oflow
