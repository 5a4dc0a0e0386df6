// Acceptance gate. Each invocation checks one numbered criterion and prints
// exactly one [PASS]/[FAIL] line for it; the process exit code mirrors the
// verdict. Usage: oflow_acceptance <criterion 1..11> <path-to-cli-binary>.

#include <quadmath.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oflow/backtest.hpp"
#include "oflow/exec.hpp"
#include "oflow/fit.hpp"
#include "oflow/gof.hpp"
#include "oflow/impact.hpp"
#include "oflow/json_io.hpp"
#include "oflow/likelihood.hpp"
#include "oflow/simulate.hpp"
#include "oflow/stats.hpp"

namespace fs = std::filesystem;
using namespace oflow;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string details;
};

// ---------------------------------------------------------------------------
// Shared generators
// ---------------------------------------------------------------------------

HawkesSpec random_constant_spec(std::mt19937_64& rng, int P) {
  std::uniform_real_distribution<double> ua(0.02, 0.3);
  std::uniform_real_distribution<double> ub(0.2, 2.5);
  std::uniform_real_distribution<double> um(0.05, 0.6);
  HawkesSpec spec;
  spec.kernel.P = P;
  for (int m = 0; m < P; ++m) {
    for (int n = 0; n < P; ++n) {
      spec.kernel.alpha[m][n] = ua(rng);
      spec.kernel.beta[m][n] = ub(rng);
    }
  }
  while (!spec.kernel.stable()) {
    for (int m = 0; m < P; ++m)
      for (int n = 0; n < P; ++n) spec.kernel.alpha[m][n] *= 0.7;
  }
  spec.baselines.clear();
  for (int m = 0; m < P; ++m) spec.baselines.push_back(Baseline::constant(um(rng)));
  return spec;
}

std::vector<EventStream> random_events(std::mt19937_64& rng, int P, int n_total, double T) {
  std::uniform_real_distribution<double> u(0.0, T);
  std::vector<EventStream> ev(P);
  for (int p = 0; p < P; ++p) {
    ev[p].side = p == 0 ? Side::Buy : Side::Sell;
    ev[p].window = {0.0, T};
    const int n = n_total / P;
    for (int i = 0; i < n; ++i) ev[p].times.push_back(u(rng));
    std::sort(ev[p].times.begin(), ev[p].times.end());
    ev[p].times.erase(std::unique(ev[p].times.begin(), ev[p].times.end()), ev[p].times.end());
  }
  return ev;
}

// Independent O(n^2) log-likelihood: direct double sums plus the closed-form
// kernel compensator; constant baselines only.
double naive_loglik(const HawkesSpec& spec, const std::vector<EventStream>& ev) {
  const int P = spec.kernel.P;
  const double T_b = ev[0].window.begin;
  const double T_e = ev[0].window.end;
  double ll = 0.0;
  for (int m = 0; m < P; ++m) {
    for (double t : ev[m].times) {
      double lam = spec.baselines[m].value(t);
      for (int n = 0; n < P; ++n) {
        const double a = spec.kernel.alpha[m][n];
        const double b = spec.kernel.beta[m][n];
        for (double s : ev[n].times) {
          if (s < t) lam += a * std::exp(-b * (t - s));
        }
      }
      if (!(lam > 0.0)) return -std::numeric_limits<double>::infinity();
      ll += std::log(lam);
    }
    double comp = spec.baselines[m].constant_rate() * (T_e - T_b);
    for (int n = 0; n < P; ++n) {
      const double a = spec.kernel.alpha[m][n];
      const double b = spec.kernel.beta[m][n];
      for (double s : ev[n].times) comp += a / b * (1.0 - std::exp(-b * (T_e - s)));
    }
    ll -= comp;
  }
  return ll;
}

HawkesSpec symmetric_spec(double base, double alpha_s, double alpha_c, double beta,
                          double m1 = 1.0) {
  HawkesSpec spec;
  spec.kernel.P = 2;
  spec.kernel.alpha = {{{alpha_s, alpha_c}, {alpha_c, alpha_s}}};
  spec.kernel.beta = {{{beta, beta}, {beta, beta}}};
  spec.baselines = {Baseline::constant(base), Baseline::constant(base)};
  spec.m1 = m1;
  return spec;
}

std::vector<EventStream> empty_flow(const TimeWindow& w) {
  std::vector<EventStream> m(2);
  m[0].side = Side::Buy;
  m[0].window = w;
  m[1].side = Side::Sell;
  m[1].window = w;
  return m;
}

Schedule manual_schedule(std::vector<double> times, std::vector<double> trades,
                         TimeWindow w) {
  Schedule s;
  s.kind = ScheduleKind::Twap;
  s.window = w;
  s.times = std::move(times);
  s.trades = std::move(trades);
  double x0 = 0.0;
  for (double xi : s.trades) x0 -= xi;
  s.x0 = x0;
  double inv = x0;
  for (double xi : s.trades) {
    inv += xi;
    s.inventory.push_back(inv);
  }
  s.kappa.assign(s.trades.size(), 0.0);
  s.deviation.assign(s.trades.size(), 0.0);
  return s;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

// ---------------------------------------------------------------------------
// Criterion 1: recursive log-likelihood vs naive double sum, plus speed
// ---------------------------------------------------------------------------

Outcome criterion_1() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> un(100, 2000);
  double max_rel = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int P = 1 + rep % 2;
    const auto spec = random_constant_spec(rng, P);
    const int n_total = un(rng);
    const auto ev = random_events(rng, P, n_total, 1800.0 + 0.9 * n_total);
    const double fast = log_likelihood(spec, ev);
    const double slow = naive_loglik(spec, ev);
    const double rel = std::abs(fast - slow) / std::max(1.0, std::abs(slow));
    max_rel = std::max(max_rel, rel);
  }

  // Speed at n = 2000: worst case over 10 fresh instances, both P values.
  double worst_ms = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    const int P = 1 + rep % 2;
    const auto spec = random_constant_spec(rng, P);
    const auto ev = random_events(rng, P, 2000, 3600.0);
    const auto t0 = Clock::now();
    volatile double sink = log_likelihood(spec, ev);
    (void)sink;
    worst_ms = std::max(worst_ms, 1000.0 * seconds_since(t0));
  }

  Outcome out;
  out.pass = max_rel <= 1e-8 && worst_ms < 50.0;
  out.details = "max rel err " + fmt(max_rel) + " (<=1e-8), worst recursive eval " +
                fmt(worst_ms) + " ms (<50) on 100 instances, n<=2000, P in {1,2}";
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 2: analytic gradient/Hessian vs central finite differences
// ---------------------------------------------------------------------------

Outcome criterion_2() {
  std::mt19937_64 rng(202);
  double max_grad_rel = 0.0;
  double max_hess_rel = 0.0;
  bool symmetric = true;

  for (int rep = 0; rep < 50; ++rep) {
    const int P = 1 + rep % 2;
    auto spec = random_constant_spec(rng, P);
    if (rep % 5 == 3) {
      // Mix in piecewise baselines so the derivative blocks see them too.
      std::vector<Baseline> bl;
      for (int m = 0; m < P; ++m) {
        bl.push_back(Baseline::piecewise({0.0, 60.0, 140.0, 200.0}, {0.2, 0.5, 0.3}));
      }
      spec.baselines = bl;
    }
    const auto ev = random_events(rng, P, 90 + (rep * 7) % 120, 200.0);
    const auto d = grad_hessian(spec, ev, true);
    const auto theta = pack_params(spec);
    const int n = static_cast<int>(theta.size());

    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (d.hessian[i][j] != d.hessian[j][i]) symmetric = false;
      }
    }

    for (int i = 0; i < n; ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(theta[i]));
      auto tp = theta;
      tp[i] += h;
      auto tm = theta;
      tm[i] -= h;
      const auto dp = grad_hessian(unpack_params(spec, tp), ev, false);
      const auto dm = grad_hessian(unpack_params(spec, tm), ev, false);
      const double fd = (dp.loglik - dm.loglik) / (2.0 * h);
      const double gscale = std::max({1.0, std::abs(fd), std::abs(d.gradient[i])});
      max_grad_rel = std::max(max_grad_rel, std::abs(d.gradient[i] - fd) / gscale);
      for (int k = 0; k < n; ++k) {
        const double fdh = (dp.gradient[k] - dm.gradient[k]) / (2.0 * h);
        const double hscale = std::max({1.0, std::abs(fdh), std::abs(d.hessian[k][i])});
        max_hess_rel = std::max(max_hess_rel, std::abs(d.hessian[k][i] - fdh) / hscale);
      }
    }
  }

  Outcome out;
  out.pass = symmetric && max_grad_rel <= 1e-5 && max_hess_rel <= 1e-5;
  out.details = "50 instances: grad max rel " + fmt(max_grad_rel) + ", Hessian max rel " +
                fmt(max_hess_rel) + " (<=1e-5), Hessian exactly symmetric: " +
                (symmetric ? "yes" : "NO");
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 3: univariate parameter recovery at session scale
// ---------------------------------------------------------------------------

Outcome criterion_3() {
  const auto t0 = Clock::now();
  const double alpha = 0.12, beta = 0.40;
  const double T = 8.0 * 3600.0;
  // Baseline sized for ~5000 events: rate = base / (1 - alpha/beta).
  const double base = 5000.0 * (1.0 - alpha / beta) / T;

  HawkesSpec gen;
  gen.kernel.P = 1;
  gen.kernel.alpha[0][0] = alpha;
  gen.kernel.beta[0][0] = beta;
  gen.baselines = {Baseline::constant(base)};

  std::vector<double> err_a, err_b;
  int converged = 0, stable = 0;
  std::size_t total_events = 0;
  FitConfig cfg;
  cfg.model = FitConfig::Model::Univariate;

  for (int seed = 0; seed < 50; ++seed) {
    const auto ev = simulate_hawkes(gen, {0.0, T}, 9000 + seed);
    total_events += ev[0].times.size();
    const auto fit = fit_mle(ev, cfg);
    if (fit.converged) {
      ++converged;
      const double a_hat = fit.spec.kernel.alpha[0][0];
      const double b_hat = fit.spec.kernel.beta[0][0];
      err_a.push_back(std::abs(a_hat - alpha) / alpha);
      err_b.push_back(std::abs(b_hat - beta) / beta);
      if (a_hat / b_hat < 1.0) ++stable;
    }
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v.empty() ? std::numeric_limits<double>::infinity()
                     : (v.size() % 2 == 1 ? v[v.size() / 2]
                                          : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]));
  };
  const double med_a = median(err_a);
  const double med_b = median(err_b);
  const double elapsed = seconds_since(t0);

  Outcome out;
  out.pass = converged == 50 && stable == converged && med_a <= 0.15 && med_b <= 0.15 &&
             elapsed <= 300.0;
  out.details = "50 seeds, ~" + std::to_string(total_events / 50) +
                " events each: median rel err alpha " + fmt(med_a) + ", beta " + fmt(med_b) +
                " (<=0.15); converged " + std::to_string(converged) + "/50, all stable: " +
                (stable == converged ? "yes" : "NO") + "; " + fmt(elapsed) + " s (<=300)";
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 4: residual KS calibration and misspecification power
// ---------------------------------------------------------------------------

Outcome criterion_4() {
  HawkesSpec gen;
  gen.kernel.P = 1;
  gen.kernel.alpha[0][0] = 0.12;
  gen.kernel.beta[0][0] = 0.40;
  gen.baselines = {Baseline::constant(0.06)};
  const TimeWindow w{0.0, 2.0 * 3600.0};

  int pass_true = 0, reject_poisson = 0;
  const int sessions = 200;
  for (int s = 0; s < sessions; ++s) {
    const auto ev = simulate_hawkes(gen, w, 40000 + s);
    const auto res_true = time_change_residuals(gen, ev);
    if (diagnostics(res_true[0], 50).ks_p >= 0.05) ++pass_true;

    HawkesSpec flat;
    flat.kernel.P = 1;
    flat.kernel.alpha[0][0] = 0.0;
    flat.kernel.beta[0][0] = 1.0;
    const double rate = static_cast<double>(ev[0].times.size()) / w.length();
    flat.baselines = {Baseline::constant(rate)};
    const auto res_flat = time_change_residuals(flat, ev);
    if (diagnostics(res_flat[0], 50).ks_p < 0.05) ++reject_poisson;
  }

  Outcome out;
  out.pass = pass_true >= 180 && reject_poisson >= 160;
  out.details = "true model KS p>=0.05 in " + std::to_string(pass_true) + "/200 (>=180); " +
                "misspecified flat-rate fit rejected in " + std::to_string(reject_poisson) +
                "/200 (>=160)";
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 5: spline baseline shape recovery on inhomogeneous Poisson data
// ---------------------------------------------------------------------------

Outcome criterion_5() {
  // Bump-shaped truth: quiet open, rise toward gate closure, drop in the
  // final hour. Expressed in the same 10-bump log-spline family.
  const double T = 8.0 * 3600.0;
  SplineBaseline truth;
  truth.n_basis = 10;
  truth.window = {0.0, T};
  truth.coeffs = {-3.9, -3.9, -3.6, -3.2, -2.8, -2.4, -1.9, -1.4, -2.6, -2.6};

  HawkesSpec gen;
  gen.kernel.P = 1;
  gen.kernel.alpha[0][0] = 0.0;
  gen.kernel.beta[0][0] = 1.0;
  gen.baselines = {Baseline::spline(truth)};

  const Baseline truth_b = Baseline::spline(truth);
  // Shape sanity of the truth itself: rising toward closure, final-hour drop.
  const double rate_open = truth_b.value(0.5 * 3600.0);
  const double rate_peak = truth_b.value(6.6 * 3600.0);
  const double rate_close = truth_b.value(7.9 * 3600.0);
  const bool shape_ok = rate_peak > 3.0 * rate_open && rate_close < 0.55 * rate_peak;

  FitConfig cfg;
  cfg.model = FitConfig::Model::Poisson;
  cfg.baseline = Baseline::Kind::Spline;
  cfg.n_basis = 10;

  std::vector<double> l2;
  int converged = 0;
  std::size_t total_events = 0;
  for (int seed = 0; seed < 30; ++seed) {
    const auto ev = simulate_hawkes(gen, {0.0, T}, 70000 + seed);
    total_events += ev[0].times.size();
    const auto fit = fit_mle(ev, cfg);
    if (fit.converged) ++converged;
    const Baseline& hat = fit.spec.baselines[0];
    const int K = 4000;
    double num = 0.0, den = 0.0;
    for (int k = 0; k <= K; ++k) {
      const double t = T * k / K;
      const double wgt = (k == 0 || k == K) ? 0.5 : 1.0;
      const double d = hat.value(t) - truth_b.value(t);
      num += wgt * d * d;
      den += wgt * truth_b.value(t) * truth_b.value(t);
    }
    l2.push_back(std::sqrt(num / den));
  }
  std::sort(l2.begin(), l2.end());
  const double med = l2[l2.size() / 2];

  Outcome out;
  out.pass = shape_ok && med <= 0.15 && converged == 30;
  out.details = "truth rises x" + fmt(rate_peak / rate_open) + " then drops to " +
                fmt(rate_close / rate_peak) + " of peak; median relative L2 error " +
                fmt(med) + " (<=0.15) over 30 seeds, ~" +
                std::to_string(total_events / 30) + " events each, converged " +
                std::to_string(converged) + "/30";
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 6: zeta/omega numerics against a quad-precision oracle
// ---------------------------------------------------------------------------

void zeta_omega_quad(double y, double* z, double* w) {
  const __float128 yq = y;
  const __float128 em = expm1q(-yq);
  *z = static_cast<double>(-em / yq);
  *w = static_cast<double>((em + yq) / (yq * yq));
}

Outcome criterion_6() {
  double max_cs = 0.0;    // closed vs series
  double max_quad = 0.0;  // both vs quad oracle
  for (const double a : {1e-8, 1e-6, 1e-4}) {
    for (const double y : {a, -a}) {
      double zq, wq;
      zeta_omega_quad(y, &zq, &wq);
      max_cs = std::max(max_cs, std::abs(zeta_closed(y) - zeta_series(y)));
      max_cs = std::max(max_cs, std::abs(omega_closed(y) - omega_series(y)));
      for (const double z : {zeta_closed(y), zeta_series(y)}) {
        max_quad = std::max(max_quad, std::abs(z - zq));
      }
      for (const double w : {omega_closed(y), omega_series(y)}) {
        max_quad = std::max(max_quad, std::abs(w - wq));
      }
    }
  }
  const auto [z0, w0] = zeta_omega(0.0);
  const bool exact0 = z0 == 1.0 && w0 == 0.5;

  Outcome out;
  out.pass = max_cs <= 1e-12 && max_quad <= 1e-12 && exact0;
  out.details = "closed vs series max abs " + fmt(max_cs) +
                ", vs quad-precision oracle max abs " + fmt(max_quad) +
                " (<=1e-12) at |y| in {1e-8,1e-6,1e-4}; zeta(0)=1 and omega(0)=1/2 exact: " +
                (exact0 ? "yes" : "NO");
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 7: schedule degeneracies
// ---------------------------------------------------------------------------

Outcome criterion_7() {
  const TimeWindow w{0.0, 8.0 * 3600.0};
  const auto grid = make_uniform_grid(w, 480);
  const double x0 = 250.0;
  const auto spec = symmetric_spec(0.05, 0.12, 0.04, 0.40);
  const double rho = resilience_from_kernel(0.16, 0.40, w.length());
  const auto params = make_impact_params(0.5, rho, 2e-4, 1.0);

  // (a) scale 0 == block-rate-block benchmark, per grid point, on a live market.
  const auto market = simulate_hawkes(spec, w, 777);
  const auto opt0 = discretize_optimal(x0, spec, params, market, grid, 0.0);
  const auto bench = ow(x0, w, rho, grid);
  double max_dev_ow = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    max_dev_ow = std::max(max_dev_ow, std::abs(opt0.trades[k] - bench.trades[k]));
    max_dev_ow = std::max(max_dev_ow, std::abs(opt0.inventory[k] - bench.inventory[k]));
  }

  // (b) near-infinite resilience collapses the block scheme onto TWAP.
  const double rho_fast = 1e6 / 3600.0;
  const auto ow_fast = ow(x0, w, rho_fast, grid);
  const auto flat = twap(x0, w, grid);
  double max_dev_twap = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    max_dev_twap = std::max(max_dev_twap, std::abs(ow_fast.trades[k] - flat.trades[k]));
    max_dev_twap = std::max(max_dev_twap, std::abs(ow_fast.inventory[k] - flat.inventory[k]));
  }

  // (c) every schedule kind closes at exactly zero inventory.
  VolumeProfile profile;
  profile.bucket_width = w.length() / 480.0;
  profile.volumes.assign(480, 1.0);
  profile.factors.assign(480, 1.0);
  const auto opt1 = discretize_optimal(x0, spec, params, market, grid, 1.0);
  const auto opt_half = discretize_optimal(x0, spec, params, market, grid, 0.5);
  const bool zero_end = opt0.inventory.back() == 0.0 && bench.inventory.back() == 0.0 &&
                        ow_fast.inventory.back() == 0.0 && flat.inventory.back() == 0.0 &&
                        vwap(x0, w, profile).inventory.back() == 0.0 &&
                        opt1.inventory.back() == 0.0 && opt_half.inventory.back() == 0.0;

  Outcome out;
  out.pass = max_dev_ow <= 1e-9 && max_dev_twap <= 1e-3 && zero_end;
  out.details = "scale-0 vs block benchmark max |dev| " + fmt(max_dev_ow) +
                " MWh (<=1e-9); rho=1e6/h vs TWAP max |dev| " + fmt(max_dev_twap) +
                " MWh (<=1e-3); terminal inventory exactly zero: " +
                (zero_end ? "yes" : "NO");
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 8: shortfall propagator oracle and the mu=1 degeneracy
// ---------------------------------------------------------------------------

Outcome criterion_8() {
  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> ut(0.0, 28800.0);
  std::uniform_real_distribution<double> ux(-8.0, 8.0);
  std::uniform_real_distribution<double> umu(0.0, 1.0);
  std::uniform_real_distribution<double> urho(1e-5, 1e-2);
  std::uniform_int_distribution<int> un(5, 200);

  double max_rel = 0.0;
  const TimeWindow w{0.0, 28800.0};
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> times;
    const int n = un(rng);
    for (int i = 0; i < n; ++i) times.push_back(ut(rng));
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    std::vector<double> trades;
    for (std::size_t i = 0; i < times.size(); ++i) trades.push_back(ux(rng));
    const auto s = manual_schedule(times, trades, w);
    const auto params = make_impact_params(umu(rng), urho(rng), 0.0, 1.0);
    const double direct = propagator_cost_direct(s, params);
    MarketPath market;
    market.window = w;
    market.flow = empty_flow(w);
    market.spread = constant_series(0.0, 0.0);
    market.eta = constant_series(0.0, 0.0);
    const double fast = shortfall(s, market, params).propagator_cost;
    max_rel = std::max(max_rel, std::abs(fast - direct) / std::max(1.0, std::abs(direct)));
  }

  // mu = 1, eta = 0, spread = 0: every schedule moving x0 costs x0^2/2.
  const auto degenerate = make_impact_params(1.0, 1e-3, 0.0, 1.0);
  MarketPath still;
  still.window = w;
  still.flow = empty_flow(w);
  still.spread = constant_series(0.0, 0.0);
  still.eta = constant_series(0.0, 0.0);
  const double x0 = 100.0;
  double max_spread_cost = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<double> times;
    const int n = 3 + un(rng) % 50;
    for (int i = 0; i < n; ++i) times.push_back(ut(rng));
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    std::vector<double> trades(times.size(), 0.0);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < trades.size(); ++i) {
      trades[i] = ux(rng);
      acc += trades[i];
    }
    trades.back() = -x0 - acc;  // equal total volume across all schedules
    const auto s = manual_schedule(times, trades, w);
    const double total = shortfall(s, still, degenerate).total;
    max_spread_cost =
        std::max(max_spread_cost, std::abs(total - x0 * x0 / 2.0) / (x0 * x0 / 2.0));
  }

  Outcome out;
  out.pass = max_rel <= 1e-8 && max_spread_cost <= 1e-9;
  out.details = "recursion vs pairwise sum max rel " + fmt(max_rel) +
                " (<=1e-8) on 100 random schedules; mu=1 equal-volume cost spread " +
                fmt(max_spread_cost) + " rel (<=1e-9)";
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 9: directional backtest with session-shaped frictions
// ---------------------------------------------------------------------------

Outcome criterion_9() {
  const auto t0 = Clock::now();
  const TimeWindow w{0.0, 8.0 * 3600.0};

  // Order flow: mild clustering, near-symmetric cross-excitation.
  const double alpha_s = 0.006, alpha_c = 0.004, beta = 0.05, base = 0.008;
  const auto spec = symmetric_spec(base, alpha_s, alpha_c, beta);
  const double branching = (alpha_s + alpha_c) / beta;
  const double rho = (1.0 - branching) / (w.length() / 2.0);
  auto params = make_impact_params(0.5, rho, 0.05, 1.0);

  // Frictions high at the open and into the close (delivery decoupling).
  const StepSeries spread = session_profile(w, 2.0, 0.8, 1.5);
  const StepSeries eta = session_profile(w, 0.08, 0.03, 0.06);

  // Mildly U-shaped volume profile for the VWAP benchmark.
  const std::size_t n_buckets = 96;
  VolumeProfile profile;
  profile.bucket_width = w.length() / static_cast<double>(n_buckets);
  for (std::size_t k = 0; k < n_buckets; ++k) {
    const double x = (static_cast<double>(k) + 0.5) / static_cast<double>(n_buckets);
    profile.volumes.push_back(0.8 + 1.2 * (x - 0.5) * (x - 0.5) * 4.0 * 0.5);
  }
  double mean_v = 0.0;
  for (double v : profile.volumes) mean_v += v;
  mean_v /= static_cast<double>(n_buckets);
  for (double v : profile.volumes) profile.factors.push_back(v / mean_v);

  const int n_sessions = 500;
  std::vector<MarketPath> markets;
  markets.reserve(n_sessions);
  for (int i = 0; i < n_sessions; ++i) {
    markets.push_back(make_market(spec, w, 500000 + i, spread, eta));
  }

  ComparisonConfig cfg;
  cfg.x0 = 250.0;
  cfg.grid_intervals = 480;
  cfg.params = params;
  StrategyVariant subject;
  subject.kind = ScheduleKind::Optimal;
  subject.scale = 1.0;
  subject.model = spec;
  StrategyVariant b_twap;
  b_twap.kind = ScheduleKind::Twap;
  StrategyVariant b_vwap;
  b_vwap.kind = ScheduleKind::Vwap;
  cfg.strategies = {subject, b_twap, b_vwap};
  cfg.profile = profile;
  cfg.ci_level = 0.95;
  cfg.ci_resamples = 2000;
  cfg.ci_seed = 424242;
  cfg.threads = 1;

  const auto report = run_comparison(cfg, markets);
  const double elapsed = seconds_since(t0);

  const auto& r_twap = report.r_agg[0];
  const auto& r_vwap = report.r_agg[1];
  const auto& ci_twap = report.r_ci[0];
  const auto& ci_vwap = report.r_ci[1];

  Outcome out;
  out.pass = r_twap.mean > 0.0 && ci_twap.lo > 0.0 && r_vwap.mean > 0.0 &&
             ci_vwap.lo > 0.0 && r_twap.n == static_cast<std::size_t>(n_sessions) &&
             r_vwap.n == static_cast<std::size_t>(n_sessions) && elapsed <= 600.0;
  out.details = "500 sessions: mean r_TWAP " + fmt(r_twap.mean) + " [" + fmt(ci_twap.lo) +
                ", " + fmt(ci_twap.hi) + "], mean r_VWAP " + fmt(r_vwap.mean) + " [" +
                fmt(ci_vwap.lo) + ", " + fmt(ci_vwap.hi) +
                "] (95% bootstrap CIs exclude 0); " + fmt(elapsed) + " s (<=600)";
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 10: book-walking, eta regression, spread averaging
// ---------------------------------------------------------------------------

Outcome criterion_10() {
  // 20 fixed ladders with exact expected per-unit costs (same accumulation
  // order as the implementation: sum level fills, one terminal division).
  struct LadderCase {
    std::vector<BookLevelRow> levels;
    double size;
    double penalty;
    double expect;
  };
  std::vector<LadderCase> cases = {
      {{{0, 10}, {1, 10}}, 15.0, 2.0, 5.0 / 15.0},
      {{{0, 10}, {1, 10}}, 20.0, 2.0, 10.0 / 20.0},
      {{{0, 10}, {1, 10}}, 5.0, 2.0, 0.0},
      {{{0, 5}, {2, 5}, {3, 10}}, 12.0, 2.0, 16.0 / 12.0},
      {{{0, 4}, {1, 4}}, 10.0, 2.0, 10.0 / 10.0},
      {{{0, 4}, {1, 4}}, 10.0, 5.0, 16.0 / 10.0},
      {{{0, 1}}, 1.0, 2.0, 0.0},
      {{{0, 1}}, 3.0, 2.0, 4.0 / 3.0},
      {{{0, 2}, {5, 2}}, 4.0, 2.0, 10.0 / 4.0},
      {{{0, 2}, {5, 2}}, 3.0, 2.0, 5.0 / 3.0},
      {{{0, 8}, {1, 0}, {2, 8}}, 16.0, 2.0, 16.0 / 16.0},   // empty level dropped
      {{{3, 6}, {4, 6}}, 9.0, 2.0, 3.0 / 9.0},              // rebased away-touch book
      {{{0, 100}}, 100.0, 2.0, 0.0},
      {{{0, 100}}, 150.0, 2.0, 100.0 / 150.0},
      {{{0, 1}, {1, 1}, {2, 1}, {3, 1}}, 4.0, 2.0, 6.0 / 4.0},
      {{{0, 1}, {1, 1}, {2, 1}, {3, 1}}, 2.5, 2.0, 2.0 / 2.5},
      {{{0, 0.5}, {1, 0.5}}, 2.0, 1.0, 2.5 / 2.0},
      {{{0, 7}, {2, 3}}, 7.0, 2.0, 0.0},
      {{{0, 7}, {2, 3}}, 10.0, 2.0, 6.0 / 10.0},
      {{{0, 6}, {1, 6}, {2, 12}}, 24.0, 2.0, 30.0 / 24.0},
  };
  int exact = 0;
  for (const auto& c : cases) {
    const auto lad = build_ladder(c.levels);
    if (walk_book_cost(lad, c.size, c.penalty) == c.expect) ++exact;
  }

  // Planted temporary-impact slope, n = 1e4 noisy book walks.
  std::mt19937_64 rng(1010);
  std::normal_distribution<double> noise(0.0, 0.08);
  std::uniform_real_distribution<double> us(1.0, 25.0);
  const double eta_true = 4e-3;
  std::vector<double> sizes, costs;
  for (int i = 0; i < 10000; ++i) {
    const double q = us(rng);
    sizes.push_back(q);
    costs.push_back(eta_true * q + noise(rng));
  }
  const auto efit = fit_eta(sizes, costs);
  const bool eta_ok = std::abs(efit.eta - eta_true) <= 3.0 * efit.se;

  // Duration-weighted spread: averaging over a partition reproduces the whole.
  std::uniform_real_distribution<double> uq(0.01, 0.5);
  QuoteSeries q;
  q.window = {0.0, 600.0};
  double t = 0.0;
  std::mt19937_64 rng2(2020);
  while (t < 600.0) {
    q.timestamps.push_back(t);
    const double half = uq(rng2) / 2.0;
    q.best_bid.push_back(100.0 - half);
    q.best_ask.push_back(100.0 + half);
    t += 1.0 + 20.0 * uq(rng2);
  }
  double max_part = 0.0;
  std::uniform_real_distribution<double> ut(0.0, 600.0);
  for (int rep = 0; rep < 50; ++rep) {
    double a = ut(rng2), c = ut(rng2);
    if (a > c) std::swap(a, c);
    if (c - a < 1.0) continue;
    const double b = a + (c - a) * 0.37;
    const double whole = time_weighted_bas(q, {a, c});
    const double split = (time_weighted_bas(q, {a, b}) * (b - a) +
                          time_weighted_bas(q, {b, c}) * (c - b)) /
                         (c - a);
    max_part = std::max(max_part, std::abs(whole - split));
  }

  Outcome out;
  out.pass = exact == 20 && eta_ok && max_part <= 1e-9;
  out.details = "walk-the-book exact on " + std::to_string(exact) +
                "/20 ladders; planted slope |err| " + fmt(std::abs(efit.eta - eta_true)) +
                " <= 3 SE (" + fmt(3.0 * efit.se) + ") at n=1e4: " + (eta_ok ? "yes" : "NO") +
                "; spread partition consistency max " + fmt(max_part) + " (<=1e-9)";
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 11: CLI pipeline determinism (byte-identical reruns)
// ---------------------------------------------------------------------------

int run_cmd(const std::string& cmd) { return std::system(cmd.c_str()); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion_11(const std::string& cli) {
  Outcome out;
  const fs::path root = fs::temp_directory_path() / "oflow_accept11";
  std::error_code ec;
  fs::remove_all(root, ec);
  fs::create_directories(root / "runA");
  fs::create_directories(root / "runB");

  // Shared inputs: a model spec, synthetic book snapshots, synthetic quotes.
  {
    std::ofstream spec(root / "spec.json");
    spec << "{\n"
         << "  \"P\": 2,\n"
         << "  \"alpha\": [[0.12, 0.04], [0.04, 0.12]],\n"
         << "  \"beta\": [[0.4, 0.4], [0.4, 0.4]],\n"
         << "  \"baseline\": {\"kind\": \"constant\", \"rate\": 0.05},\n"
         << "  \"m1\": 1.0\n"
         << "}\n";
  }
  {
    // Two hours of snapshots at 60 s spacing, three levels per side, with a
    // deterministic wobble in the standing volumes.
    std::ofstream snaps(root / "snapshots.csv");
    snaps << "product_id,timestamp,level_index,price_offset_ticks,volume_mwh,side\n";
    const long long anchor = 1725148800000000LL;
    for (int k = 0; k <= 120; ++k) {
      const long long ts = anchor + static_cast<long long>(k) * 60000000LL;
      for (const char side : {'B', 'S'}) {
        for (int lvl = 0; lvl < 3; ++lvl) {
          const double vol = 5.0 + 2.0 * ((k * 7 + lvl * 3 + (side == 'B')) % 5);
          snaps << "H1," << ts << "," << lvl << "," << lvl << "," << vol << "," << side
                << "\n";
        }
      }
    }
    std::ofstream quotes(root / "quotes.csv");
    quotes << "product_id,timestamp,best_bid,best_ask\n";
    for (int k = 0; k <= 240; ++k) {
      const long long ts = anchor + static_cast<long long>(k) * 30000000LL;
      const double half = 0.05 + 0.01 * (k % 4);
      quotes << "H1," << ts << "," << (100.0 - half) << "," << (100.0 + half) << "\n";
    }
  }

  const std::string shared = root.string();
  auto pipeline = [&](const std::string& dir, int threads) -> bool {
    const std::string pre = "cd " + dir + " && " + cli + " --threads " +
                            std::to_string(threads) + " --seed 7 --out . ";
    const std::vector<std::string> steps = {
        "simulate --spec " + shared + "/spec.json --hours 2 --product H1 --out trades.csv",
        "calibrate --trades trades.csv --model bi --window-hours 2 --out fits.json",
        "gof --fits fits.json --trades trades.csv --window-hours 2 --out gof.csv",
        "impact --snapshots " + shared + "/snapshots.csv --quotes " + shared +
            "/quotes.csv --tick-size 0.1 --out impact.json",
        "strategy --fit fits.json --index 0 --impact impact.json --x0 150 --horizon 2h "
        "--scale 1 --grid 120 --out schedule.csv",
        "backtest --fits fits.json --impact impact.json --x0 150 --seeds 10 --scale 1 "
        "--grid 120 --horizon 2h --strategies optimal,ow,twap,vwap --out report.json",
        "report --backtest report.json --out report.md",
    };
    for (const auto& s : steps) {
      if (run_cmd(pre + s + " > /dev/null 2>&1") != 0) {
        out.details = "pipeline step failed in " + dir + ": " + s;
        return false;
      }
    }
    return true;
  };

  if (!pipeline((root / "runA").string(), 1)) return out;
  if (!pipeline((root / "runB").string(), 3)) return out;

  // Byte-compare the full output trees.
  std::vector<std::string> rel_a, rel_b;
  for (const auto& e : fs::recursive_directory_iterator(root / "runA")) {
    if (e.is_regular_file()) rel_a.push_back(fs::relative(e.path(), root / "runA").string());
  }
  for (const auto& e : fs::recursive_directory_iterator(root / "runB")) {
    if (e.is_regular_file()) rel_b.push_back(fs::relative(e.path(), root / "runB").string());
  }
  std::sort(rel_a.begin(), rel_a.end());
  std::sort(rel_b.begin(), rel_b.end());
  if (rel_a != rel_b) {
    out.details = "output file sets differ between reruns";
    return out;
  }
  std::size_t n_same = 0;
  for (const auto& rel : rel_a) {
    if (slurp(root / "runA" / rel) != slurp(root / "runB" / rel)) {
      out.details = "file differs between reruns: " + rel;
      return out;
    }
    ++n_same;
  }
  fs::remove_all(root, ec);

  out.pass = true;
  out.details = "full pipeline (simulate->calibrate->gof->impact->strategy->backtest->"
                "report) rerun with different thread counts: " +
                std::to_string(n_same) + " output files byte-identical";
  return out;
}

const char* criterion_name(int n) {
  switch (n) {
    case 1: return "recursive log-likelihood matches the naive double sum, under 50 ms";
    case 2: return "analytic gradient and Hessian match finite differences";
    case 3: return "univariate parameter recovery at session scale";
    case 4: return "residual KS calibration and misspecification power";
    case 5: return "spline baseline shape recovery";
    case 6: return "zeta/omega numerics near zero";
    case 7: return "schedule degeneracies (scale-0, fast resilience, exact close-out)";
    case 8: return "shortfall propagator oracle and mu=1 degeneracy";
    case 9: return "directional backtest beats TWAP and VWAP";
    case 10: return "book-walking, slope regression, and spread averaging";
    case 11: return "CLI pipeline determinism";
  }
  return "unknown";
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <criterion 1..11> [cli-binary]\n", argv[0]);
    return 2;
  }
  const int n = std::atoi(argv[1]);
  const std::string cli = argc > 2 ? argv[2] : "";

  Outcome out;
  try {
    switch (n) {
      case 1: out = criterion_1(); break;
      case 2: out = criterion_2(); break;
      case 3: out = criterion_3(); break;
      case 4: out = criterion_4(); break;
      case 5: out = criterion_5(); break;
      case 6: out = criterion_6(); break;
      case 7: out = criterion_7(); break;
      case 8: out = criterion_8(); break;
      case 9: out = criterion_9(); break;
      case 10: out = criterion_10(); break;
      case 11:
        if (cli.empty()) {
          out.details = "criterion 11 needs the CLI binary path as the second argument";
        } else {
          out = criterion_11(cli);
        }
        break;
      default:
        std::fprintf(stderr, "unknown criterion %d\n", n);
        return 2;
    }
  } catch (const std::exception& e) {
    out.pass = false;
    out.details = std::string("unexpected exception: ") + e.what();
  }

  std::printf("[%s] criterion %d: %s — %s\n", out.pass ? "PASS" : "FAIL", n,
              criterion_name(n), out.details.c_str());
  return out.pass ? 0 : 1;
}
