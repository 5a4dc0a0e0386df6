#include <doctest.h>

#include <cmath>
#include <vector>

#include "oflow/fit.hpp"
#include "oflow/simulate.hpp"

using namespace oflow;

TEST_SUITE_BEGIN("fit");

namespace {

std::vector<EventStream> simulate_uni(double base, double alpha, double beta, double T,
                                      std::uint64_t seed) {
  HawkesSpec spec;
  spec.kernel.P = 1;
  spec.kernel.alpha[0][0] = alpha;
  spec.kernel.beta[0][0] = beta;
  spec.baselines = {Baseline::constant(base)};
  return simulate_hawkes(spec, {0.0, T}, seed);
}

}  // namespace

TEST_CASE("univariate MLE recovers generating parameters on a long window") {
  // approx 0.125/s stationary rate for 2h -> approx 900 events: plenty for 20% accuracy.
  const auto ev = simulate_uni(0.05, 0.12, 0.4, 2.0 * 3600.0, 42);
  FitConfig cfg;
  cfg.model = FitConfig::Model::Univariate;
  const auto fit = fit_mle(ev, cfg, "sim");
  CHECK(fit.converged);
  // Convergence may be declared by the relative-objective tolerance; the
  // projected gradient still has to be near-stationary.
  CHECK(fit.gradient_norm < 1e-3);
  CHECK(fit.n_params == 3);
  CHECK(fit.spec.kernel.alpha[0][0] == doctest::Approx(0.12).epsilon(0.25));
  CHECK(fit.spec.kernel.beta[0][0] == doctest::Approx(0.4).epsilon(0.25));
  CHECK(fit.spec.baselines[0].constant_rate() == doctest::Approx(0.05).epsilon(0.25));
  CHECK(fit.spec.kernel.stable());
  CHECK(fit.aic == doctest::Approx(-2.0 * fit.loglik + 2.0 * fit.n_params).epsilon(1e-12));
  CHECK(fit.data_id == "sim");
}

TEST_CASE("fitted likelihood is a local maximum: nudging parameters lowers it") {
  const auto ev = simulate_uni(0.05, 0.10, 0.5, 3600.0, 7);
  FitConfig cfg;
  cfg.model = FitConfig::Model::Univariate;
  const auto fit = fit_mle(ev, cfg);
  REQUIRE(fit.converged);
  for (const double bump : {1.05, 0.95}) {
    auto nudged = fit.spec;
    nudged.kernel.alpha[0][0] *= bump;
    CHECK(log_likelihood(nudged, ev) <= fit.loglik + 1e-7);
    nudged = fit.spec;
    nudged.kernel.beta[0][0] *= bump;
    CHECK(log_likelihood(nudged, ev) <= fit.loglik + 1e-7);
    nudged = fit.spec;
    nudged.baselines[0] = Baseline::constant(nudged.baselines[0].constant_rate() * bump);
    CHECK(log_likelihood(nudged, ev) <= fit.loglik + 1e-7);
  }
}

TEST_CASE("Poisson fit: closed-form rate n/T, Hawkes beats it on clustered data") {
  const auto ev = simulate_uni(0.05, 0.15, 0.4, 2.0 * 3600.0, 99);
  FitConfig pcfg;
  pcfg.model = FitConfig::Model::Poisson;
  const auto pfit = fit_mle(ev, pcfg);
  CHECK(pfit.converged);
  CHECK(pfit.n_params == 1);
  const double n = static_cast<double>(ev[0].times.size());
  const double T = ev[0].window.length();
  CHECK(pfit.spec.baselines[0].constant_rate() == doctest::Approx(n / T).epsilon(1e-6));
  // Poisson loglik has closed form n log(n/T) - n.
  CHECK(pfit.loglik == doctest::Approx(n * std::log(n / T) - n).epsilon(1e-9));

  FitConfig hcfg;
  hcfg.model = FitConfig::Model::Univariate;
  const auto hfit = fit_mle(ev, hcfg);
  CHECK(hfit.loglik > pfit.loglik);
  CHECK(hfit.aic < pfit.aic);
}

TEST_CASE("bivariate fit recovers a symmetric cross-exciting kernel roughly") {
  HawkesSpec gen;
  gen.kernel.P = 2;
  gen.kernel.alpha = {{{0.12, 0.05}, {0.05, 0.12}}};
  gen.kernel.beta = {{{0.4, 0.4}, {0.4, 0.4}}};
  gen.baselines = {Baseline::constant(0.05), Baseline::constant(0.05)};
  const auto ev = simulate_hawkes(gen, {0.0, 4.0 * 3600.0}, 123);

  FitConfig cfg;
  cfg.model = FitConfig::Model::Bivariate;
  const auto fit = fit_mle(ev, cfg, "bi");
  CHECK(fit.converged);
  CHECK(fit.n_params == 2 + 8);
  CHECK(fit.spec.kernel.stable());
  // Self-excitation dominates cross-excitation, as generated.
  CHECK(fit.spec.kernel.alpha[0][0] > fit.spec.kernel.alpha[0][1]);
  CHECK(fit.spec.kernel.alpha[1][1] > fit.spec.kernel.alpha[1][0]);
  CHECK(fit.spec.kernel.alpha[0][0] == doctest::Approx(0.12).epsilon(0.5));
  CHECK(fit.loglik >= log_likelihood(gen, ev));  // MLE beats the generator in-sample
}

TEST_CASE("piecewise and spline baselines improve the fit of ramping data") {
  // Strongly rising baseline, no self-excitation.
  HawkesSpec gen;
  gen.kernel.P = 1;
  gen.kernel.alpha[0][0] = 0.0;
  gen.kernel.beta[0][0] = 1.0;
  gen.baselines = {Baseline::piecewise({0.0, 1800.0, 3600.0}, {0.05, 0.5})};
  const auto ev = simulate_hawkes(gen, {0.0, 3600.0}, 17);

  FitConfig flat;
  flat.model = FitConfig::Model::Poisson;
  const auto f0 = fit_mle(ev, flat, "ramp");

  FitConfig pw;
  pw.model = FitConfig::Model::Univariate;
  pw.baseline = Baseline::Kind::Piecewise;
  pw.n_piecewise = 4;
  const auto f1 = fit_mle(ev, pw, "ramp");
  CHECK(f1.converged);
  CHECK(f1.loglik > f0.loglik + 20.0);
  // The piecewise rates should ramp up.
  const auto& rates = f1.spec.baselines[0].piecewise_rates();
  CHECK(rates.back() > 3.0 * rates.front());

  FitConfig sp;
  sp.model = FitConfig::Model::Univariate;
  sp.baseline = Baseline::Kind::Spline;
  sp.n_basis = 6;
  const auto f2 = fit_mle(ev, sp, "ramp");
  CHECK(f2.converged);
  CHECK(f2.loglik > f0.loglik + 20.0);
  CHECK(f2.spec.baselines[0].value(3500.0) > 3.0 * f2.spec.baselines[0].value(100.0));

  const auto ranking = select_model({f0, f1, f2});
  CHECK(ranking.order[0] != 0);  // the flat model never wins
  CHECK(ranking.delta_aic[0][0] == 0.0);
}

TEST_CASE("select_model refuses to rank fits of different datasets") {
  const auto ev = simulate_uni(0.1, 0.05, 0.5, 1800.0, 3);
  FitConfig cfg;
  cfg.model = FitConfig::Model::Poisson;
  auto a = fit_mle(ev, cfg, "one");
  auto b = fit_mle(ev, cfg, "two");
  CHECK_THROWS_AS(select_model({a, b}), ConfigError);
}

TEST_CASE("too little data is a DataError") {
  std::vector<EventStream> ev(1);
  ev[0].times = {1.0, 2.0, 3.0};
  ev[0].window = {0.0, 10.0};
  FitConfig cfg;
  cfg.model = FitConfig::Model::Univariate;
  CHECK_THROWS_AS(fit_mle(ev, cfg), DataError);
}

TEST_SUITE_END();
