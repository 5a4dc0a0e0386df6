#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oflow/backtest.hpp"
#include "oflow/csv.hpp"
#include "oflow/events.hpp"
#include "oflow/exec.hpp"
#include "oflow/fit.hpp"
#include "oflow/gof.hpp"
#include "oflow/impact.hpp"
#include "oflow/json_io.hpp"
#include "oflow/rng.hpp"
#include "oflow/simulate.hpp"
#include "oflow/thread_pool.hpp"

namespace oflow::cli {

namespace {

using nlohmann::json;

// Epoch anchor for simulated streams: 2024-09-01T00:00:00Z in microseconds.
constexpr double kSimEpochAnchorUs = 1725148800.0 * 1e6;

struct GlobalArgs {
  unsigned threads = 0;  // 0 = hardware concurrency
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  std::string config_path;
};

// One configurable value: its CLI option (to detect explicit flags), a setter
// from a JSON config value, and a getter used to hash the effective config.
struct Binding {
  CLI::Option* opt = nullptr;
  std::function<void(const json&)> set;
  std::function<json()> get;
  bool hashed = true;
};

class Bindings {
 public:
  template <typename T>
  void add(const std::string& key, CLI::Option* opt, T* value, bool hashed = true) {
    Binding b;
    b.opt = opt;
    b.set = [value, key](const json& j) {
      try {
        *value = j.get<T>();
      } catch (const json::exception&) {
        throw ConfigError("config: bad value type for key '" + key + "'");
      }
    };
    b.get = [value] { return json(*value); };
    b.hashed = hashed;
    entries_.emplace(key, std::move(b));
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  // Sets `key` from the config file unless the flag was given explicitly.
  void apply(const std::string& key, const json& value) const {
    const Binding& b = entries_.at(key);
    if (b.opt != nullptr && b.opt->count() > 0) return;  // flags win
    b.set(value);
  }

  void append_effective(json& out) const {
    for (const auto& [key, b] : entries_)
      if (b.hashed) out[key] = b.get();
  }

 private:
  std::map<std::string, Binding> entries_;
};

// Overlay the JSON config file onto two binding scopes (global + active
// subcommand) and reject keys known to neither.
void apply_config(const json& cfg, const Bindings& global, const Bindings& sub,
                  const std::string& subcommand) {
  if (!cfg.is_object()) throw ConfigError("config file: expected a JSON object");
  for (auto it = cfg.begin(); it != cfg.end(); ++it) {
    if (global.has(it.key()))
      global.apply(it.key(), it.value());
    else if (sub.has(it.key()))
      sub.apply(it.key(), it.value());
    else
      throw ConfigError("config file: unknown key '" + it.key() + "' for subcommand '" +
                        subcommand + "'");
  }
}

std::uint64_t effective_config_hash(const std::string& subcommand, const GlobalArgs& g,
                                    const Bindings& sub) {
  json eff;
  eff["subcommand"] = subcommand;
  eff["seed"] = g.seed;
  sub.append_effective(eff);
  return fnv1a64(eff.dump());
}

// "8h", "30m", "45s", or plain seconds, all positive.
double parse_duration_seconds(const std::string& text) {
  if (text.empty()) throw ConfigError("duration: empty value");
  double scale = 1.0;
  std::string number = text;
  switch (text.back()) {
    case 'h': scale = 3600.0; number.pop_back(); break;
    case 'm': scale = 60.0; number.pop_back(); break;
    case 's': scale = 1.0; number.pop_back(); break;
    default: break;
  }
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(number, &used);
  } catch (const std::exception&) {
    throw ConfigError("duration: cannot parse '" + text + "'");
  }
  if (used != number.size() || !(value > 0.0) || !std::isfinite(value))
    throw ConfigError("duration: cannot parse '" + text + "'");
  return value * scale;
}

std::string resolve_out(const GlobalArgs& g, const std::string& name) {
  namespace fs = std::filesystem;
  fs::path p(name);
  if (!p.is_absolute()) p = fs::path(g.out_dir) / p;
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return p.string();
}

std::string sanitize_id(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '_';
    out.push_back(ok ? c : '_');
  }
  return out;
}

double mean_or(const std::vector<double>& xs, double fallback) {
  if (xs.empty()) return fallback;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// ---------------------------------------------------------------------------
// calibrate

struct CalibrateArgs {
  std::string trades;
  std::string model = "bi";
  std::string baseline = "constant";
  int n_basis = 10;
  int n_piecewise = 8;
  double m1 = 0.0;  // <= 0: use the mean observed order size
  double window_hours = 8.0;
  int restarts = 5;
  int max_iterations = 500;
  std::string out = "fits.json";
};

FitConfig::Model parse_model(const std::string& name) {
  if (name == "uni") return FitConfig::Model::Univariate;
  if (name == "bi") return FitConfig::Model::Bivariate;
  if (name == "poisson") return FitConfig::Model::Poisson;
  throw ConfigError("--model must be one of uni|bi|poisson, got '" + name + "'");
}

Baseline::Kind parse_baseline(const std::string& name) {
  if (name == "constant") return Baseline::Kind::Constant;
  if (name == "piecewise") return Baseline::Kind::Piecewise;
  if (name == "spline") return Baseline::Kind::Spline;
  throw ConfigError("--baseline must be one of constant|piecewise|spline, got '" + name + "'");
}

const EventStream* find_stream(const std::vector<EventStream>& streams,
                               const std::string& product, Side side) {
  for (const EventStream& s : streams)
    if (s.product_id == product && s.side == side) return &s;
  return nullptr;
}

double mean_order_size(const std::vector<const EventStream*>& streams) {
  double total = 0.0;
  std::size_t n = 0;
  for (const EventStream* s : streams) {
    for (double v : s->sizes) total += v;
    n += s->sizes.size();
  }
  return n == 0 ? 1.0 : total / static_cast<double>(n);
}

int run_calibrate(const GlobalArgs& g, const CalibrateArgs& a, std::uint64_t config_hash) {
  if (a.trades.empty()) throw ConfigError("calibrate: --trades is required");
  WindowOptions window;
  window.default_hours = a.window_hours;
  LoadReport load_report;
  const std::vector<EventStream> streams = load_trades(a.trades, window, &load_report);

  std::vector<std::string> products;
  for (const EventStream& s : streams)
    if (products.empty() || products.back() != s.product_id) products.push_back(s.product_id);

  struct Task {
    std::vector<EventStream> data;  // one or {buy, sell}
    std::string data_id;
  };
  std::vector<Task> tasks;
  const FitConfig::Model model = parse_model(a.model);
  if (model == FitConfig::Model::Bivariate) {
    for (const std::string& p : products) {
      const EventStream* buy = find_stream(streams, p, Side::Buy);
      const EventStream* sell = find_stream(streams, p, Side::Sell);
      if (buy == nullptr || sell == nullptr)
        throw DataError("calibrate: product '" + p + "' needs both buy and sell streams");
      tasks.push_back({{*buy, *sell}, p});
    }
  } else {
    for (const EventStream& s : streams)
      tasks.push_back({{s}, s.product_id + ":" + to_string(s.side)});
  }

  FitConfig config;
  config.model = model;
  config.baseline = parse_baseline(a.baseline);
  config.n_basis = a.n_basis;
  config.n_piecewise = a.n_piecewise;
  config.restarts = a.restarts;
  config.max_iterations = a.max_iterations;

  std::vector<FitResult> fits(tasks.size());
  parallel_for(tasks.size(), resolve_thread_count(g.threads), [&](std::size_t i) {
    FitConfig local = config;
    if (a.m1 > 0.0) {
      local.m1 = a.m1;
    } else {
      std::vector<const EventStream*> ptrs;
      for (const EventStream& s : tasks[i].data) ptrs.push_back(&s);
      local.m1 = mean_order_size(ptrs);
    }
    fits[i] = fit_mle(tasks[i].data, local, tasks[i].data_id);
  });

  const std::string out_path = resolve_out(g, a.out);
  write_fits_file(out_path, fits, Manifest{config_hash, g.seed, kToolVersion});

  bool all_converged = true;
  for (const FitResult& f : fits) {
    std::printf("fit %s: loglik=%.6f aic=%.6f converged=%d iterations=%d\n",
                f.data_id.c_str(), f.loglik, f.aic, f.converged ? 1 : 0, f.iterations);
    all_converged = all_converged && f.converged;
  }
  std::printf("wrote %s (%zu fits, %zu rows read, %zu dropped)\n", out_path.c_str(),
              fits.size(), load_report.rows, load_report.dropped_outside_window);
  if (!all_converged) {
    std::fprintf(stderr, "calibrate: some fits did not converge (outputs written)\n");
    return 4;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string spec_path;
  std::string fits;
  int index = 0;
  double hours = 8.0;
  std::string product = "SIM";
  double price = 0.0;
  std::string out = "trades.csv";
};

HawkesSpec load_model(const std::string& spec_path, const std::string& fits_path, int index) {
  if (!spec_path.empty() && !fits_path.empty())
    throw ConfigError("give either --spec or --fits, not both");
  if (!spec_path.empty()) return spec_from_json(load_json_file(spec_path));
  if (!fits_path.empty()) {
    const std::vector<FitResult> fits = read_fits_file(fits_path);
    if (index < 0 || static_cast<std::size_t>(index) >= fits.size())
      throw ConfigError("--index " + std::to_string(index) + " out of range (file has " +
                        std::to_string(fits.size()) + " fits)");
    return fits[static_cast<std::size_t>(index)].spec;
  }
  throw ConfigError("one of --spec or --fits is required");
}

int run_simulate(const GlobalArgs& g, const SimulateArgs& a, std::uint64_t config_hash) {
  const HawkesSpec spec = load_model(a.spec_path, a.fits, a.index);
  if (!(a.hours > 0.0)) throw ConfigError("simulate: --hours must be positive");
  const TimeWindow window{0.0, a.hours * kSecondsPerHour};
  std::vector<EventStream> streams = simulate_hawkes(spec, window, split_seed(g.seed, 0));
  std::size_t total = 0;
  for (EventStream& s : streams) {
    s.product_id = a.product;
    s.window_begin_epoch_us = kSimEpochAnchorUs;
    total += s.size();
  }
  const std::string out_path = resolve_out(g, a.out);
  write_trades(out_path, streams, spec.m1, a.price);
  write_manifest(out_path, Manifest{config_hash, g.seed, kToolVersion});
  std::printf("wrote %s (%zu events over %.17gs)\n", out_path.c_str(), total, window.length());
  return 0;
}

// ---------------------------------------------------------------------------
// gof

struct GofArgs {
  std::string fits;
  std::string trades;
  double window_hours = 8.0;
  int lags = 100;
  std::string out = "gof.csv";
};

// Dataset ids written by calibrate: "<product>" for bivariate fits,
// "<product>:B" / "<product>:S" for single-component fits.
void split_data_id(const std::string& data_id, int P, std::string* product, Side* side) {
  if (P == 2) {
    *product = data_id;
    return;
  }
  const std::size_t pos = data_id.rfind(':');
  if (pos == std::string::npos || pos + 2 != data_id.size() ||
      (data_id[pos + 1] != 'B' && data_id[pos + 1] != 'S'))
    throw DataError("fit data_id '" + data_id + "' does not name a (product, side)");
  *product = data_id.substr(0, pos);
  *side = data_id[pos + 1] == 'B' ? Side::Buy : Side::Sell;
}

int run_gof(const GlobalArgs& g, const GofArgs& a, std::uint64_t config_hash) {
  if (a.fits.empty()) throw ConfigError("gof: --fits is required");
  if (a.trades.empty()) throw ConfigError("gof: --trades is required");
  const std::vector<FitResult> fits = read_fits_file(a.fits);
  WindowOptions window;
  window.default_hours = a.window_hours;
  const std::vector<EventStream> streams = load_trades(a.trades, window);

  struct Row {
    std::string dataset;
    std::string product;
    Side side = Side::Buy;
    std::size_t n_events = 0;
    DiagnosticsReport diag;
    bool has_stats = false;
  };
  std::vector<std::vector<Row>> rows(fits.size());
  const std::string out_path = resolve_out(g, a.out);
  const std::string out_dir = std::filesystem::path(out_path).parent_path().string();

  parallel_for(fits.size(), resolve_thread_count(g.threads), [&](std::size_t i) {
    const FitResult& fit = fits[i];
    std::string product;
    Side side = Side::Buy;
    split_data_id(fit.data_id, fit.spec.kernel.P, &product, &side);

    std::vector<EventStream> data;
    if (fit.spec.kernel.P == 2) {
      const EventStream* buy = find_stream(streams, product, Side::Buy);
      const EventStream* sell = find_stream(streams, product, Side::Sell);
      if (buy == nullptr || sell == nullptr)
        throw DataError("gof: product '" + product + "' needs both buy and sell streams");
      data = {*buy, *sell};
    } else {
      const EventStream* s = find_stream(streams, product, side);
      if (s == nullptr)
        throw DataError("gof: no stream for dataset '" + fit.data_id + "'");
      data = {*s};
    }

    const std::vector<std::vector<double>> residuals = time_change_residuals(fit.spec, data);
    for (std::size_t c = 0; c < residuals.size(); ++c) {
      Row row;
      row.dataset = fit.data_id;
      row.product = product;
      row.side = data[c].side;
      row.n_events = data[c].size();
      if (!residuals[c].empty()) {
        row.diag = diagnostics(residuals[c], a.lags, fit.aic);
        row.has_stats = true;
        const auto qq = qq_exponential(residuals[c]);
        const std::string qq_name =
            "qq_" + sanitize_id(fit.data_id + "_" + to_string(data[c].side)) + ".csv";
        csv::Writer qq_out((std::filesystem::path(out_dir) / qq_name).string(),
                           {"theoretical_quantile", "empirical_quantile"});
        for (const auto& [th, emp] : qq)
          qq_out.write_row({csv::format_double(th), csv::format_double(emp)});
      }
      rows[i].push_back(std::move(row));
    }
  });

  const double nan = std::numeric_limits<double>::quiet_NaN();
  csv::Writer out(out_path, {"dataset", "product_id", "side", "n_events", "ks_stat", "ks_p",
                             "ad_stat", "lb_q", "lb_p", "lb_lags", "lb_valid",
                             "wasserstein_exp1", "aic"});
  for (const auto& fit_rows : rows) {
    for (const Row& r : fit_rows) {
      const DiagnosticsReport& d = r.diag;
      out.write_row({r.dataset, r.product, to_string(r.side), std::to_string(r.n_events),
                     csv::format_double(r.has_stats ? d.ks_stat : nan),
                     csv::format_double(r.has_stats ? d.ks_p : nan),
                     csv::format_double(r.has_stats ? d.ad_stat : nan),
                     csv::format_double(r.has_stats ? d.lb_q : nan),
                     csv::format_double(r.has_stats ? d.lb_p : nan),
                     std::to_string(r.has_stats ? d.lb_lags : 0),
                     std::to_string(r.has_stats && d.lb_valid ? 1 : 0),
                     csv::format_double(r.has_stats ? d.wasserstein : nan),
                     csv::format_double(d.aic)});
    }
  }
  write_manifest(out_path, Manifest{config_hash, g.seed, kToolVersion});
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// impact

struct ImpactArgs {
  std::string snapshots;
  std::string quotes;
  std::vector<double> sizes{10.0, 25.0, 50.0, 100.0};
  double tick_size = 0.01;  // EUR per tick, converts book offsets to prices
  double penalty = 2.0;     // book-exhaustion penalty, ticks
  std::string out = "impact.json";
};

int run_impact(const GlobalArgs& g, const ImpactArgs& a, std::uint64_t config_hash) {
  if (a.snapshots.empty()) throw ConfigError("impact: --snapshots is required");
  if (a.sizes.empty()) throw ConfigError("impact: --sizes is required");
  for (double u : a.sizes)
    if (!(u > 0.0)) throw ConfigError("impact: sizes must be positive");
  if (!(a.tick_size > 0.0)) throw ConfigError("impact: --tick-size must be positive");

  const std::vector<SnapshotSeries> series = load_snapshots(a.snapshots);
  if (series.empty()) throw DataError("impact: no snapshots loaded");

  // Gate closure per product = the latest snapshot time; bin h covers
  // hours-to-closure in (h-1, h].
  std::map<std::string, double> close_us;
  for (const SnapshotSeries& s : series) {
    double& c = close_us[s.product_id];
    for (const BookSnapshot& snap : s.snapshots) c = std::max(c, snap.epoch_us);
  }
  double global_close = 0.0;
  for (const auto& [p, c] : close_us) global_close = std::max(global_close, c);

  std::map<std::string, std::map<int, std::vector<BookLadder>>> ladders;
  int max_bin = 0;
  std::size_t skipped_empty = 0;
  for (const SnapshotSeries& s : series) {
    const double close = close_us.at(s.product_id);
    for (const BookSnapshot& snap : s.snapshots) {
      const double hours = (close - snap.epoch_us) / (kSecondsPerHour * 1e6);
      const int bin = std::max(1, static_cast<int>(std::ceil(hours)));
      try {
        ladders[s.product_id][bin].push_back(build_ladder(snap));
      } catch (const DataError&) {
        ++skipped_empty;  // snapshot with no standing liquidity
      }
      max_bin = std::max(max_bin, bin);
    }
  }
  if (skipped_empty > 0)
    std::fprintf(stderr, "impact: skipped %zu snapshots without standing liquidity\n",
                 skipped_empty);

  // Quotes (optional) provide the time-weighted mean spread per bin.
  std::vector<QuoteSeries> quotes;
  double quote_begin_us = 0.0;
  if (!a.quotes.empty()) {
    WindowOptions qwin;
    quote_begin_us = global_close - max_bin * kSecondsPerHour * 1e6;
    qwin.begin_epoch_us = quote_begin_us;
    qwin.end_epoch_us = global_close;
    quotes = load_quotes(a.quotes, qwin);
  }

  std::vector<ImpactBin> bins;
  for (const auto& [product, by_bin] : ladders) {
    for (const auto& [bin, snaps] : by_bin) {
      if (snaps.size() < 30) {
        std::fprintf(stderr, "impact: %s bin %d skipped (%zu snapshots < 30)\n",
                     product.c_str(), bin, snaps.size());
        continue;
      }
      std::vector<double> costs;
      costs.reserve(a.sizes.size());
      bool degenerate = false;
      for (double u : a.sizes) {
        const ApproxCostResult r = approx_cost(snaps, u, a.penalty);
        costs.push_back(r.cost);
        degenerate = degenerate || r.kde_degenerate;
      }
      if (degenerate)
        std::fprintf(stderr, "impact: %s bin %d used the empirical fallback estimator\n",
                     product.c_str(), bin);
      const EtaFit fit = fit_eta(a.sizes, costs);

      ImpactBin cell;
      cell.product_id = product;
      cell.hours_to_close = bin;
      cell.eta = fit.eta * a.tick_size;
      cell.sigma = fit.sigma * a.tick_size;
      if (!quotes.empty()) {
        const QuoteSeries* qs = nullptr;
        for (const QuoteSeries& q : quotes)
          if (q.product_id == product) qs = &q;
        if (qs != nullptr) {
          const double close = close_us.at(product);
          const double lo = (close - bin * kSecondsPerHour * 1e6 - quote_begin_us) / 1e6;
          try {
            cell.mean_bas = time_weighted_bas(*qs, TimeWindow{lo, lo + kSecondsPerHour});
          } catch (const DataError&) {
            std::fprintf(stderr, "impact: %s bin %d lacks quote coverage\n", product.c_str(),
                         bin);
          }
        }
      }
      bins.push_back(std::move(cell));
    }
  }
  if (bins.empty()) throw DataError("impact: no (product, bin) cell had enough snapshots");

  const std::string out_path = resolve_out(g, a.out);
  write_impact_file(out_path, bins, Manifest{config_hash, g.seed, kToolVersion});
  std::printf("wrote %s (%zu cells)\n", out_path.c_str(), bins.size());
  return 0;
}

// ---------------------------------------------------------------------------
// strategy

struct StrategyArgs {
  std::string fits;
  int index = 0;
  std::string impact;
  double x0 = 250.0;
  std::string horizon = "8h";
  double scale = 1.0;
  double mu = 0.5;
  std::size_t grid = 480;
  std::string trades;  // optional replay source for kappa/deviation
  std::string product;
  std::string out = "schedule.csv";
};

// The execution model needs both order-flow components; reduce the fitted
// kernel to symmetric form when necessary.
SymmetricKernel execution_kernel(const HawkesSpec& spec) {
  if (spec.kernel.P != 2)
    throw ConfigError("the optimal strategy needs a bivariate order-flow fit");
  return is_symmetric(spec.kernel) ? as_symmetric(spec.kernel)
                                   : symmetric_reduction(spec.kernel);
}

// Resilience from the total-flow self-excitation: under a symmetric kernel the
// aggregate order-flow rate is self-exciting with jump alpha_s + alpha_c.
double resilience_for(const SymmetricKernel& k, double session_length) {
  return resilience_from_kernel(k.alpha_s + k.alpha_c, k.beta, session_length);
}

ImpactParams params_from_impact_file(const std::string& path, double mu, double rho,
                                     double m1) {
  const std::vector<ImpactBin> bins = read_impact_file(path);
  if (bins.empty()) throw DataError(path + ": no impact cells");
  std::vector<double> etas;
  for (const ImpactBin& b : bins) etas.push_back(b.eta);
  return make_impact_params(mu, rho, mean_or(etas, 0.0), m1);
}

int run_strategy(const GlobalArgs& g, const StrategyArgs& a, std::uint64_t config_hash) {
  if (a.fits.empty()) throw ConfigError("strategy: --fit is required");
  if (a.impact.empty()) throw ConfigError("strategy: --impact is required");
  if (!(a.x0 > 0.0)) throw ConfigError("strategy: --x0 must be positive");
  if (a.grid == 0) throw ConfigError("strategy: --grid must be positive");
  const std::vector<FitResult> fits = read_fits_file(a.fits);
  if (a.index < 0 || static_cast<std::size_t>(a.index) >= fits.size())
    throw ConfigError("--index out of range");
  const FitResult& fit = fits[static_cast<std::size_t>(a.index)];
  const SymmetricKernel kernel = execution_kernel(fit.spec);

  TimeWindow window{0.0, parse_duration_seconds(a.horizon)};
  std::vector<EventStream> market;
  if (!a.trades.empty()) {
    WindowOptions wopt;
    wopt.default_hours = window.length() / kSecondsPerHour;
    const std::vector<EventStream> streams = load_trades(a.trades, wopt);
    const std::string product = a.product.empty() ? fit.data_id : a.product;
    for (const EventStream& s : streams)
      if (s.product_id == product) market.push_back(s);
    if (market.empty())
      throw DataError("strategy: no streams for product '" + product + "' in " + a.trades);
    window = market.front().window;
  } else {
    market = simulate_hawkes(fit.spec, window, split_seed(g.seed, 0));
  }

  const double rho = resilience_for(kernel, window.length());
  const ImpactParams params = params_from_impact_file(a.impact, a.mu, rho, fit.spec.m1);
  const std::vector<double> grid = make_uniform_grid(window, a.grid);
  const Schedule s = discretize_optimal(a.x0, symmetrize(fit.spec), params, market, grid, a.scale);

  const std::string out_path = resolve_out(g, a.out);
  csv::Writer out(out_path, {"t", "X_t", "xi_t", "kappa_t", "D_t"});
  for (std::size_t k = 0; k < s.times.size(); ++k)
    out.write_row({csv::format_double(s.times[k]), csv::format_double(s.inventory[k]),
                   csv::format_double(s.trades[k]), csv::format_double(s.kappa[k]),
                   csv::format_double(s.deviation[k])});
  write_manifest(out_path, Manifest{config_hash, g.seed, kToolVersion});
  std::printf("wrote %s (rho=%.17g eta=%.17g scale=%.17g)\n", out_path.c_str(), rho,
              params.eta, a.scale);
  return 0;
}

// ---------------------------------------------------------------------------
// backtest

struct BacktestArgs {
  std::string fits;
  int index = 0;
  std::string impact;
  std::string strategies = "optimal,twap,vwap,ow";
  double x0 = 250.0;
  std::size_t seeds = 500;
  double scale = 1.0;
  double mu = 0.5;
  std::size_t grid = 480;
  std::string horizon = "8h";
  std::string product;
  double ci_level = 0.95;
  int ci_resamples = 2000;
  std::string out = "report.json";
};

std::vector<std::string> split_csv_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

ScheduleKind parse_strategy_name(const std::string& name) {
  if (name == "optimal") return ScheduleKind::Optimal;
  if (name == "twap") return ScheduleKind::Twap;
  if (name == "vwap") return ScheduleKind::Vwap;
  if (name == "ow") return ScheduleKind::Ow;
  throw ConfigError("unknown strategy '" + name + "' (expects optimal|twap|vwap|ow)");
}

// Piecewise-constant session profile from (hours-to-closure bin -> value)
// cells; hours before the earliest covered bin reuse its value.
StepSeries profile_from_bins(std::vector<std::pair<int, double>> cells, double session_end) {
  std::sort(cells.begin(), cells.end(),
            [](const auto& x, const auto& y) { return x.first > y.first; });
  StepSeries s;
  s.times.push_back(0.0);
  s.values.push_back(cells.front().second);
  for (const auto& [bin, value] : cells) {
    const double from = session_end - bin * kSecondsPerHour;
    if (from <= 0.0) {
      s.values.back() = value;
    } else {
      s.times.push_back(from);
      s.values.push_back(value);
    }
  }
  return s;
}

double time_average(const StepSeries& s, const TimeWindow& window) {
  double total = 0.0;
  for (std::size_t i = 0; i < s.times.size(); ++i) {
    const double lo = std::max(s.times[i], window.begin);
    const double hi = i + 1 < s.times.size() ? std::min(s.times[i + 1], window.end) : window.end;
    if (hi > lo) total += s.values[i] * (hi - lo);
  }
  return total / window.length();
}

int run_backtest(const GlobalArgs& g, const BacktestArgs& a, std::uint64_t config_hash) {
  if (a.fits.empty()) throw ConfigError("backtest: --fits is required");
  if (a.impact.empty()) throw ConfigError("backtest: --impact is required");
  if (a.seeds == 0) throw ConfigError("backtest: --seeds must be positive");
  const std::vector<FitResult> fits = read_fits_file(a.fits);
  if (a.index < 0 || static_cast<std::size_t>(a.index) >= fits.size())
    throw ConfigError("--index out of range");
  const FitResult& fit = fits[static_cast<std::size_t>(a.index)];

  const std::vector<std::string> names = split_csv_list(a.strategies);
  if (names.empty()) throw ConfigError("backtest: --strategies is empty");

  const TimeWindow window{0.0, parse_duration_seconds(a.horizon)};
  const SymmetricKernel kernel = execution_kernel(fit.spec);
  const double rho = resilience_for(kernel, window.length());

  // Impact cells drive the session's eta and spread profiles.
  std::vector<ImpactBin> bins = read_impact_file(a.impact);
  const std::string product = a.product.empty() ? fit.data_id : a.product;
  std::vector<ImpactBin> mine;
  for (const ImpactBin& b : bins)
    if (b.product_id == product) mine.push_back(b);
  if (mine.empty()) {
    std::set<std::string> products;
    for (const ImpactBin& b : bins) products.insert(b.product_id);
    if (products.size() == 1) {
      mine = bins;
      std::fprintf(stderr, "backtest: using impact cells of product '%s'\n",
                   products.begin()->c_str());
    } else {
      throw ConfigError("backtest: impact file has no cells for product '" + product + "'");
    }
  }
  std::vector<std::pair<int, double>> eta_cells;
  std::vector<std::pair<int, double>> spread_cells;
  bool missing_bas = false;
  for (const ImpactBin& b : mine) {
    eta_cells.emplace_back(b.hours_to_close, b.eta);
    if (b.mean_bas) {
      spread_cells.emplace_back(b.hours_to_close, *b.mean_bas);
    } else {
      spread_cells.emplace_back(b.hours_to_close, 0.0);
      missing_bas = true;
    }
  }
  if (missing_bas)
    std::fprintf(stderr, "backtest: cells without mean_bas contribute zero spread\n");
  const StepSeries eta_profile = profile_from_bins(eta_cells, window.end);
  const StepSeries spread_profile = profile_from_bins(spread_cells, window.end);

  ComparisonConfig cc;
  cc.x0 = a.x0;
  cc.grid_intervals = a.grid;
  cc.params = make_impact_params(a.mu, rho, time_average(eta_profile, window), fit.spec.m1);
  const HawkesSpec exec_spec = symmetrize(fit.spec);
  for (const std::string& name : names) {
    StrategyVariant v;
    v.kind = parse_strategy_name(name);
    v.scale = a.scale;
    v.model = exec_spec;
    v.name = name;
    cc.strategies.push_back(std::move(v));
  }
  cc.ci_level = a.ci_level;
  cc.ci_resamples = a.ci_resamples;
  cc.ci_seed = split_seed(g.seed, 0xC1);
  cc.threads = resolve_thread_count(g.threads);

  std::vector<MarketPath> markets;
  markets.reserve(a.seeds);
  for (std::size_t i = 0; i < a.seeds; ++i)
    markets.push_back(
        make_market(fit.spec, window, split_seed(g.seed, i), spread_profile, eta_profile));

  const BacktestReport report = run_comparison(cc, markets);

  const std::string out_path = resolve_out(g, a.out);
  const Manifest manifest{config_hash, g.seed, kToolVersion};
  write_report_file(out_path, report, manifest);

  const std::filesystem::path dir = std::filesystem::path(out_path).parent_path();
  const std::string costs_path = (dir / "report_costs.csv").string();
  {
    csv::Writer out(costs_path, {"run", "strategy", "propagator_cost", "market_flow_cost",
                                 "spread_cost", "temporary_cost", "total"});
    for (std::size_t r = 0; r < report.run_costs.size(); ++r)
      for (std::size_t s = 0; s < report.run_costs[r].size(); ++s) {
        const CostBreakdown& c = report.run_costs[r][s];
        out.write_row({std::to_string(r), report.strategy_names[s],
                       csv::format_double(c.propagator_cost),
                       csv::format_double(c.market_flow_cost),
                       csv::format_double(c.spread_cost),
                       csv::format_double(c.temporary_cost), csv::format_double(c.total)});
      }
  }
  write_manifest(costs_path, manifest);

  const std::string curves_path = (dir / "report_curves.csv").string();
  {
    std::vector<std::string> header{"t"};
    for (std::size_t b = 1; b < report.strategy_names.size(); ++b)
      header.push_back("mean_cum_diff_vs_" + report.strategy_names[b]);
    csv::Writer out(curves_path, header);
    for (std::size_t k = 0; k < report.curve_times.size(); ++k) {
      std::vector<std::string> row{csv::format_double(report.curve_times[k])};
      for (const auto& curve : report.mean_cum_diff)
        row.push_back(csv::format_double(curve[k]));
      out.write_row(row);
    }
  }
  write_manifest(curves_path, manifest);

  const std::string summary_path = (dir / "report_summary.csv").string();
  {
    csv::Writer out(summary_path, {"strategy", "mean_total", "sd_total", "n_runs", "r_mean",
                                   "r_sd", "r_lo", "r_hi"});
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t s = 0; s < report.strategy_names.size(); ++s) {
      const Aggregate& c = report.cost_agg[s];
      const Aggregate* r = s >= 1 ? &report.r_agg[s - 1] : nullptr;
      const MeanCi* ci = s >= 1 ? &report.r_ci[s - 1] : nullptr;
      out.write_row({report.strategy_names[s], csv::format_double(c.mean),
                     csv::format_double(c.sd), std::to_string(c.n),
                     csv::format_double(r ? r->mean : nan), csv::format_double(r ? r->sd : nan),
                     csv::format_double(ci ? ci->lo : nan),
                     csv::format_double(ci ? ci->hi : nan)});
    }
  }
  write_manifest(summary_path, manifest);

  for (std::size_t b = 1; b < report.strategy_names.size(); ++b)
    std::printf("r vs %s: mean=%.6g sd=%.6g ci=[%.6g, %.6g] n=%zu\n",
                report.strategy_names[b].c_str(), report.r_agg[b - 1].mean,
                report.r_agg[b - 1].sd, report.r_ci[b - 1].lo, report.r_ci[b - 1].hi,
                report.r_agg[b - 1].n);
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
  std::string backtest;  // report.json path or the directory holding it
  std::string out = "report.md";
};

int run_report(const GlobalArgs& g, const ReportArgs& a, std::uint64_t config_hash) {
  if (a.backtest.empty()) throw ConfigError("report: --backtest is required");
  namespace fs = std::filesystem;
  fs::path source(a.backtest);
  if (fs::is_directory(source)) source /= "report.json";
  const BacktestReport report = read_report_file(source.string());
  if (report.strategy_names.empty()) throw DataError("report: no strategies in " + a.backtest);

  const std::string out_path = resolve_out(g, a.out);
  std::FILE* md = std::fopen(out_path.c_str(), "wb");
  if (md == nullptr) throw DataError("cannot open " + out_path + " for writing");
  std::fprintf(md, "# Execution backtest\n\n");
  std::fprintf(md, "%zu runs, %zu strategies; subject: %s.\n\n", report.run_costs.size(),
               report.strategy_names.size(), report.strategy_names.front().c_str());
  std::fprintf(md, "## Total cost per strategy\n\n");
  std::fprintf(md, "| strategy | mean | sd | runs |\n|---|---|---|---|\n");
  for (std::size_t s = 0; s < report.strategy_names.size(); ++s) {
    const Aggregate& c = report.cost_agg[s];
    std::fprintf(md, "| %s | %.6g | %.6g | %zu |\n", report.strategy_names[s].c_str(), c.mean,
                 c.sd, c.n);
  }
  std::fprintf(md, "\n## Relative improvement of %s\n\n",
               report.strategy_names.front().c_str());
  std::fprintf(md, "r = (benchmark cost - subject cost) / benchmark cost, per run.\n\n");
  std::fprintf(md, "| benchmark | mean r | sd | 95%% CI | runs |\n|---|---|---|---|---|\n");
  for (std::size_t b = 1; b < report.strategy_names.size(); ++b) {
    const Aggregate& r = report.r_agg[b - 1];
    const MeanCi& ci = report.r_ci[b - 1];
    std::fprintf(md, "| %s | %.6g | %.6g | [%.6g, %.6g] | %zu |\n",
                 report.strategy_names[b].c_str(), r.mean, r.sd, ci.lo, ci.hi, r.n);
  }
  std::fclose(md);

  const fs::path dir = fs::path(out_path).parent_path();
  const std::string table_path = (dir / "report_table.csv").string();
  {
    csv::Writer out(table_path, {"strategy", "mean_total", "sd_total", "n_runs", "r_mean",
                                 "r_sd", "r_lo", "r_hi"});
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t s = 0; s < report.strategy_names.size(); ++s) {
      const Aggregate& c = report.cost_agg[s];
      const Aggregate* r = s >= 1 ? &report.r_agg[s - 1] : nullptr;
      const MeanCi* ci = s >= 1 ? &report.r_ci[s - 1] : nullptr;
      out.write_row({report.strategy_names[s], csv::format_double(c.mean),
                     csv::format_double(c.sd), std::to_string(c.n),
                     csv::format_double(r ? r->mean : nan), csv::format_double(r ? r->sd : nan),
                     csv::format_double(ci ? ci->lo : nan),
                     csv::format_double(ci ? ci->hi : nan)});
    }
  }
  const Manifest manifest{config_hash, g.seed, kToolVersion};
  write_manifest(out_path, manifest);
  write_manifest(table_path, manifest);
  std::printf("wrote %s and %s\n", out_path.c_str(), table_path.c_str());
  return 0;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Order-flow model calibration and optimal-liquidation toolkit"};
  app.require_subcommand(1);

  GlobalArgs g;
  Bindings global_bind;
  global_bind.add("threads", app.add_option("--threads", g.threads, "worker threads (0 = auto)"),
                  &g.threads, false);
  global_bind.add("seed", app.add_option("--seed", g.seed, "root RNG seed"), &g.seed);
  // The global --out names the output DIRECTORY; each subcommand's own --out
  // names its primary output file (resolved inside that directory).
  global_bind.add("out_dir", app.add_option("--out", g.out_dir, "output directory"), &g.out_dir,
                  false);
  app.add_option("--config", g.config_path, "JSON config file (flags override it)");

  CalibrateArgs cal;
  Bindings cal_bind;
  CLI::App* cal_cmd = app.add_subcommand("calibrate", "fit order-flow models to trades");
  cal_cmd->fallthrough();
  cal_bind.add("trades", cal_cmd->add_option("--trades", cal.trades, "trades CSV"), &cal.trades);
  cal_bind.add("model", cal_cmd->add_option("--model", cal.model, "uni|bi|poisson"), &cal.model);
  cal_bind.add("baseline",
               cal_cmd->add_option("--baseline", cal.baseline, "constant|piecewise|spline"),
               &cal.baseline);
  cal_bind.add("n_basis", cal_cmd->add_option("--n-basis", cal.n_basis, "spline basis size"),
               &cal.n_basis);
  cal_bind.add("n_piecewise",
               cal_cmd->add_option("--n-piecewise", cal.n_piecewise, "piecewise segments"),
               &cal.n_piecewise);
  cal_bind.add("m1", cal_cmd->add_option("--m1", cal.m1, "mark size (<=0: mean order size)"),
               &cal.m1);
  cal_bind.add("window_hours",
               cal_cmd->add_option("--window-hours", cal.window_hours, "session length"),
               &cal.window_hours);
  cal_bind.add("restarts", cal_cmd->add_option("--restarts", cal.restarts, "multistart count"),
               &cal.restarts);
  cal_bind.add("max_iterations",
               cal_cmd->add_option("--max-iterations", cal.max_iterations, "optimizer cap"),
               &cal.max_iterations);
  cal_bind.add("out", cal_cmd->add_option("--out", cal.out, "output fits.json"), &cal.out);

  SimulateArgs sim;
  Bindings sim_bind;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "simulate order flow from a model");
  sim_cmd->fallthrough();
  sim_bind.add("spec", sim_cmd->add_option("--spec", sim.spec_path, "model spec JSON"),
               &sim.spec_path);
  sim_bind.add("fits", sim_cmd->add_option("--fits", sim.fits, "fits.json source"), &sim.fits);
  sim_bind.add("index", sim_cmd->add_option("--index", sim.index, "fit index"), &sim.index);
  sim_bind.add("hours", sim_cmd->add_option("--hours", sim.hours, "window length, hours"),
               &sim.hours);
  sim_bind.add("product", sim_cmd->add_option("--product", sim.product, "product id"),
               &sim.product);
  sim_bind.add("price", sim_cmd->add_option("--price", sim.price, "price column value"),
               &sim.price);
  sim_bind.add("out", sim_cmd->add_option("--out", sim.out, "output trades CSV"), &sim.out);

  GofArgs gof;
  Bindings gof_bind;
  CLI::App* gof_cmd = app.add_subcommand("gof", "time-change goodness-of-fit diagnostics");
  gof_cmd->fallthrough();
  gof_bind.add("fits", gof_cmd->add_option("--fits", gof.fits, "fits.json"), &gof.fits);
  gof_bind.add("trades", gof_cmd->add_option("--trades", gof.trades, "trades CSV"), &gof.trades);
  gof_bind.add("window_hours",
               gof_cmd->add_option("--window-hours", gof.window_hours, "session length"),
               &gof.window_hours);
  gof_bind.add("lags", gof_cmd->add_option("--lags", gof.lags, "Ljung-Box lags"), &gof.lags);
  gof_bind.add("out", gof_cmd->add_option("--out", gof.out, "output gof.csv"), &gof.out);

  ImpactArgs imp;
  Bindings imp_bind;
  CLI::App* imp_cmd = app.add_subcommand("impact", "estimate cost primitives from snapshots");
  imp_cmd->fallthrough();
  imp_bind.add("snapshots", imp_cmd->add_option("--snapshots", imp.snapshots, "snapshots CSV"),
               &imp.snapshots);
  imp_bind.add("quotes", imp_cmd->add_option("--quotes", imp.quotes, "quotes CSV (optional)"),
               &imp.quotes);
  imp_bind.add("sizes",
               imp_cmd->add_option("--sizes", imp.sizes, "order sizes, MWh")->delimiter(','),
               &imp.sizes);
  imp_bind.add("tick_size", imp_cmd->add_option("--tick-size", imp.tick_size, "EUR per tick"),
               &imp.tick_size);
  imp_bind.add("penalty",
               imp_cmd->add_option("--penalty", imp.penalty, "book-exhaustion penalty, ticks"),
               &imp.penalty);
  imp_bind.add("out", imp_cmd->add_option("--out", imp.out, "output impact.json"), &imp.out);

  StrategyArgs str;
  Bindings str_bind;
  CLI::App* str_cmd = app.add_subcommand("strategy", "emit the discretized optimal schedule");
  str_cmd->fallthrough();
  str_bind.add("fit", str_cmd->add_option("--fit", str.fits, "fits.json"), &str.fits);
  str_bind.add("index", str_cmd->add_option("--index", str.index, "fit index"), &str.index);
  str_bind.add("impact", str_cmd->add_option("--impact", str.impact, "impact.json"),
               &str.impact);
  str_bind.add("x0", str_cmd->add_option("--x0", str.x0, "initial inventory, MWh"), &str.x0);
  str_bind.add("horizon", str_cmd->add_option("--horizon", str.horizon, "e.g. 8h, 30m, 900s"),
               &str.horizon);
  str_bind.add("scale", str_cmd->add_option("--scale", str.scale, "response scale in [0,1]"),
               &str.scale);
  str_bind.add("mu", str_cmd->add_option("--mu", str.mu, "permanent impact fraction"), &str.mu);
  str_bind.add("grid", str_cmd->add_option("--grid", str.grid, "grid intervals"), &str.grid);
  str_bind.add("trades", str_cmd->add_option("--trades", str.trades, "replay trades CSV"),
               &str.trades);
  str_bind.add("product", str_cmd->add_option("--product", str.product, "replay product id"),
               &str.product);
  str_bind.add("out", str_cmd->add_option("--out", str.out, "output schedule.csv"), &str.out);

  BacktestArgs bt;
  Bindings bt_bind;
  CLI::App* bt_cmd = app.add_subcommand("backtest", "compare strategies over simulated markets");
  bt_cmd->fallthrough();
  bt_bind.add("fits", bt_cmd->add_option("--fits", bt.fits, "fits.json"), &bt.fits);
  bt_bind.add("index", bt_cmd->add_option("--index", bt.index, "fit index"), &bt.index);
  bt_bind.add("impact", bt_cmd->add_option("--impact", bt.impact, "impact.json"), &bt.impact);
  bt_bind.add("strategies",
              bt_cmd->add_option("--strategies", bt.strategies, "subject first, e.g. optimal,twap"),
              &bt.strategies);
  bt_bind.add("x0", bt_cmd->add_option("--x0", bt.x0, "initial inventory, MWh"), &bt.x0);
  bt_bind.add("seeds", bt_cmd->add_option("--seeds", bt.seeds, "number of simulated sessions"),
              &bt.seeds);
  bt_bind.add("scale", bt_cmd->add_option("--scale", bt.scale, "optimal response scale"),
              &bt.scale);
  bt_bind.add("mu", bt_cmd->add_option("--mu", bt.mu, "permanent impact fraction"), &bt.mu);
  bt_bind.add("grid", bt_cmd->add_option("--grid", bt.grid, "grid intervals"), &bt.grid);
  bt_bind.add("horizon", bt_cmd->add_option("--horizon", bt.horizon, "session length"),
              &bt.horizon);
  bt_bind.add("product", bt_cmd->add_option("--product", bt.product, "impact cells product"),
              &bt.product);
  bt_bind.add("ci_level", bt_cmd->add_option("--ci-level", bt.ci_level, "bootstrap CI level"),
              &bt.ci_level);
  bt_bind.add("ci_resamples",
              bt_cmd->add_option("--ci-resamples", bt.ci_resamples, "bootstrap resamples"),
              &bt.ci_resamples);
  bt_bind.add("out", bt_cmd->add_option("--out", bt.out, "output report.json"), &bt.out);

  ReportArgs rep;
  Bindings rep_bind;
  CLI::App* rep_cmd = app.add_subcommand("report", "render a backtest into Markdown + CSV");
  rep_cmd->fallthrough();
  rep_bind.add("backtest",
               rep_cmd->add_option("--backtest", rep.backtest, "report.json or its directory"),
               &rep.backtest);
  rep_bind.add("out", rep_cmd->add_option("--out", rep.out, "output Markdown file"), &rep.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    json cfg = json::object();
    if (!g.config_path.empty()) cfg = load_json_file(g.config_path);

    struct Entry {
      CLI::App* cmd;
      const Bindings* bind;
      std::function<int(std::uint64_t)> run;
    };
    const std::vector<Entry> table{
        {cal_cmd, &cal_bind, [&](std::uint64_t h) { return run_calibrate(g, cal, h); }},
        {sim_cmd, &sim_bind, [&](std::uint64_t h) { return run_simulate(g, sim, h); }},
        {gof_cmd, &gof_bind, [&](std::uint64_t h) { return run_gof(g, gof, h); }},
        {imp_cmd, &imp_bind, [&](std::uint64_t h) { return run_impact(g, imp, h); }},
        {str_cmd, &str_bind, [&](std::uint64_t h) { return run_strategy(g, str, h); }},
        {bt_cmd, &bt_bind, [&](std::uint64_t h) { return run_backtest(g, bt, h); }},
        {rep_cmd, &rep_bind, [&](std::uint64_t h) { return run_report(g, rep, h); }},
    };
    for (const Entry& entry : table) {
      if (!entry.cmd->parsed()) continue;
      apply_config(cfg, global_bind, *entry.bind, entry.cmd->get_name());
      const std::uint64_t hash = effective_config_hash(entry.cmd->get_name(), g, *entry.bind);
      return entry.run(hash);
    }
    throw ConfigError("no subcommand given");
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const ConvergenceError& e) {
    std::fprintf(stderr, "convergence error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace oflow::cli
