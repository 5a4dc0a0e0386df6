#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "oflow/likelihood.hpp"

using namespace oflow;

TEST_SUITE_BEGIN("likelihood");

namespace {

// Independent O(n^2) reference: direct double sums for the log-intensity part
// and the closed-form kernel compensator; constant baselines handled by hand.
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
    double comp = spec.baselines[m].kind() == Baseline::Kind::Constant
                      ? spec.baselines[m].constant_rate() * (T_e - T_b)
                      : spec.baselines[m].integral(T_b, T_e);
    for (int n = 0; n < P; ++n) {
      const double a = spec.kernel.alpha[m][n];
      const double b = spec.kernel.beta[m][n];
      for (double s : ev[n].times) comp += a / b * (1.0 - std::exp(-b * (T_e - s)));
    }
    ll -= comp;
  }
  return ll;
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

HawkesSpec random_spec(std::mt19937_64& rng, int P) {
  std::uniform_real_distribution<double> ua(0.02, 0.25);
  std::uniform_real_distribution<double> ub(0.3, 2.5);
  std::uniform_real_distribution<double> um(0.05, 0.5);
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

std::vector<double> fd_gradient(const HawkesSpec& proto, const std::vector<double>& theta,
                                const std::vector<EventStream>& ev) {
  std::vector<double> g(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(theta[i]));
    auto tp = theta;
    tp[i] += h;
    auto tm = theta;
    tm[i] -= h;
    g[i] = (log_likelihood(unpack_params(proto, tp), ev) -
            log_likelihood(unpack_params(proto, tm), ev)) /
           (2.0 * h);
  }
  return g;
}

}  // namespace

TEST_CASE("log-likelihood matches a hand-computed univariate value") {
  HawkesSpec spec;
  spec.kernel.P = 1;
  spec.kernel.alpha[0][0] = 0.5;
  spec.kernel.beta[0][0] = 2.0;
  spec.baselines = {Baseline::constant(1.0)};
  std::vector<EventStream> ev(1);
  ev[0].times = {1.0, 2.0, 3.0};
  ev[0].window = {0.0, 4.0};
  CHECK(log_likelihood(spec, ev) == doctest::Approx(-4.571473761558504).epsilon(1e-14));
}

TEST_CASE("recursive log-likelihood equals the naive double sum on random instances") {
  std::mt19937_64 rng(2024);
  for (int rep = 0; rep < 12; ++rep) {
    const int P = 1 + rep % 2;
    const auto spec = random_spec(rng, P);
    const auto ev = random_events(rng, P, 260, 400.0);
    const double fast = log_likelihood(spec, ev);
    const double slow = naive_loglik(spec, ev);
    CHECK(fast == doctest::Approx(slow).epsilon(1e-10));
  }
}

TEST_CASE("recursive log-likelihood matches naive with a spline baseline") {
  std::mt19937_64 rng(77);
  SplineBaseline s;
  s.n_basis = 6;
  s.window = {0.0, 300.0};
  s.coeffs = {-2.5, -2.0, -3.0, -1.8, -2.2, -2.8};
  HawkesSpec spec;
  spec.kernel.P = 1;
  spec.kernel.alpha[0][0] = 0.15;
  spec.kernel.beta[0][0] = 0.8;
  spec.baselines = {Baseline::spline(s)};
  const auto ev = random_events(rng, 1, 120, 300.0);
  CHECK(log_likelihood(spec, ev) == doctest::Approx(naive_loglik(spec, ev)).epsilon(1e-9));
}

TEST_CASE("parameter layout and pack/unpack round-trip") {
  HawkesSpec spec;
  spec.kernel.P = 2;
  spec.kernel.alpha = {{{0.3, 0.1}, {0.2, 0.4}}};
  spec.kernel.beta = {{{2.0, 1.0}, {1.5, 3.0}}};
  spec.baselines = {Baseline::constant(0.4),
                    Baseline::piecewise({0.0, 1.0, 2.0}, {0.5, 0.7})};

  const auto layout = layout_of(spec);
  CHECK(layout.P == 2);
  CHECK(layout.baseline_size == std::vector<int>{1, 2});
  // Component blocks: 1 + 2 + 2 = 5, then 2 + 2 + 2 = 6.
  CHECK(layout.offset == std::vector<int>{0, 5});
  CHECK(layout.total == 11);
  CHECK(layout.names.size() == 11);
  CHECK(layout.kernel_offset(0) == 1);
  CHECK(layout.kernel_offset(1) == 7);

  const auto theta = pack_params(spec);
  REQUIRE(static_cast<int>(theta.size()) == layout.total);
  CHECK(theta[0] == 0.4);
  CHECK(theta[1] == 0.3);  // alpha_00
  CHECK(theta[2] == 0.1);  // alpha_01
  CHECK(theta[3] == 2.0);  // beta_00
  CHECK(theta[4] == 1.0);  // beta_01

  const auto back = unpack_params(spec, theta);
  CHECK(pack_params(back) == theta);
}

TEST_CASE("gradient matches central finite differences") {
  std::mt19937_64 rng(555);
  for (int rep = 0; rep < 4; ++rep) {
    const int P = 1 + rep % 2;
    const auto spec = random_spec(rng, P);
    const auto ev = random_events(rng, P, 160, 300.0);
    const auto d = grad_hessian(spec, ev, false);
    CHECK(d.loglik == doctest::Approx(log_likelihood(spec, ev)).epsilon(1e-12));
    const auto fd = fd_gradient(spec, pack_params(spec), ev);
    REQUIRE(d.gradient.size() == fd.size());
    for (std::size_t i = 0; i < fd.size(); ++i) {
      const double scale = std::max({1.0, std::abs(fd[i]), std::abs(d.gradient[i])});
      CHECK(std::abs(d.gradient[i] - fd[i]) / scale < 2e-6);
    }
  }
}

TEST_CASE("Hessian matches finite differences of the analytic gradient") {
  std::mt19937_64 rng(808);
  const auto spec = random_spec(rng, 2);
  const auto ev = random_events(rng, 2, 140, 250.0);
  const auto d = grad_hessian(spec, ev, true);
  const auto theta = pack_params(spec);
  const int n = static_cast<int>(theta.size());
  REQUIRE(static_cast<int>(d.hessian.size()) == n);

  for (int j = 0; j < n; ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(theta[j]));
    auto tp = theta;
    tp[j] += h;
    auto tm = theta;
    tm[j] -= h;
    const auto gp = grad_hessian(unpack_params(spec, tp), ev, false).gradient;
    const auto gm = grad_hessian(unpack_params(spec, tm), ev, false).gradient;
    for (int i = 0; i < n; ++i) {
      const double fd = (gp[i] - gm[i]) / (2.0 * h);
      const double scale = std::max({1.0, std::abs(fd), std::abs(d.hessian[i][j])});
      CHECK(std::abs(d.hessian[i][j] - fd) / scale < 5e-6);
    }
  }
}

TEST_CASE("Hessian is exactly symmetric and block-diagonal across components") {
  std::mt19937_64 rng(99);
  const auto spec = random_spec(rng, 2);
  const auto ev = random_events(rng, 2, 120, 200.0);
  const auto d = grad_hessian(spec, ev, true);
  const auto layout = layout_of(spec);
  const int n = layout.total;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      CHECK(d.hessian[i][j] == d.hessian[j][i]);  // exact, not approximate
      const bool same_block = (i < layout.offset[1]) == (j < layout.offset[1]);
      if (!same_block) CHECK(d.hessian[i][j] == 0.0);
    }
  }
}

TEST_CASE("spline-baseline gradient matches finite differences") {
  std::mt19937_64 rng(31);
  SplineBaseline s;
  s.n_basis = 5;
  s.window = {0.0, 200.0};
  s.coeffs = {-2.0, -1.5, -2.5, -1.8, -2.1};
  HawkesSpec spec;
  spec.kernel.P = 1;
  spec.kernel.alpha[0][0] = 0.2;
  spec.kernel.beta[0][0] = 1.0;
  spec.baselines = {Baseline::spline(s)};
  const auto ev = random_events(rng, 1, 100, 200.0);
  const auto d = grad_hessian(spec, ev, false);
  const auto fd = fd_gradient(spec, pack_params(spec), ev);
  for (std::size_t i = 0; i < fd.size(); ++i) {
    const double scale = std::max({1.0, std::abs(fd[i]), std::abs(d.gradient[i])});
    CHECK(std::abs(d.gradient[i] - fd[i]) / scale < 5e-6);
  }
}

TEST_SUITE_END();
