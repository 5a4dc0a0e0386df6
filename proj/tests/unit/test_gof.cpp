#include <doctest.h>

#include <cmath>
#include <vector>

#include "oflow/gof.hpp"
#include "oflow/stats.hpp"

using namespace oflow;

TEST_SUITE_BEGIN("gof");

namespace {

std::vector<EventStream> one_stream(std::vector<double> times, TimeWindow w) {
  std::vector<EventStream> ev(1);
  ev[0].times = std::move(times);
  ev[0].window = w;
  return ev;
}

}  // namespace

TEST_CASE("time-change residuals of a unit Poisson process are the gaps") {
  HawkesSpec spec;
  spec.kernel.P = 1;
  spec.kernel.alpha[0][0] = 0.0;
  spec.kernel.beta[0][0] = 1.0;
  spec.baselines = {Baseline::constant(1.0)};
  const auto ev = one_stream({0.5, 1.5, 4.0, 4.25}, {0.0, 5.0});
  const auto res = time_change_residuals(spec, ev);
  REQUIRE(res.size() == 1);
  REQUIRE(res[0].size() == 3);
  CHECK(res[0][0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(res[0][1] == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(res[0][2] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("residuals under the generating Hawkes model pass KS") {
  HawkesSpec spec;
  spec.kernel.P = 2;
  spec.kernel.alpha = {{{0.12, 0.04}, {0.04, 0.12}}};
  spec.kernel.beta = {{{0.4, 0.4}, {0.4, 0.4}}};
  spec.baselines = {Baseline::constant(0.05), Baseline::constant(0.05)};
  const auto ev = simulate_hawkes(spec, {0.0, 6.0 * 3600.0}, 2718);
  const auto res = time_change_residuals(spec, ev);
  for (int p = 0; p < 2; ++p) {
    REQUIRE(res[p].size() > 200);
    const auto d = diagnostics(res[p]);
    CHECK(d.ks_p > 0.01);
    // Residual mean of Exp(1) data is ~1.
    double mean = 0.0;
    for (double r : res[p]) mean += r;
    mean /= static_cast<double>(res[p].size());
    CHECK(mean == doctest::Approx(1.0).epsilon(0.15));
  }
}

TEST_CASE("a misspecified flat-rate model fails KS on clustered data") {
  HawkesSpec gen;
  gen.kernel.P = 1;
  gen.kernel.alpha[0][0] = 0.25;
  gen.kernel.beta[0][0] = 0.5;
  gen.baselines = {Baseline::constant(0.05)};
  const auto ev = simulate_hawkes(gen, {0.0, 4.0 * 3600.0}, 31);

  HawkesSpec flat;           // Poisson at the empirical rate
  flat.kernel.P = 1;
  flat.kernel.alpha[0][0] = 0.0;
  flat.kernel.beta[0][0] = 1.0;
  const double rate = static_cast<double>(ev[0].times.size()) / ev[0].window.length();
  flat.baselines = {Baseline::constant(rate)};
  const auto res = time_change_residuals(flat, ev);
  const auto d = diagnostics(res[0]);
  CHECK(d.ks_p < 0.05);
}

TEST_CASE("diagnostics on frozen series match precomputed statistics") {
  const std::vector<double> x = {0.3, 1.2, 0.7, 2.0, 0.1, 0.9, 1.5, 0.4, 1.1, 0.8};
  const auto d = diagnostics(x, 3);
  CHECK(d.lb_lags == 3);
  CHECK(d.lb_valid);
  CHECK(d.lb_q == doctest::Approx(4.758084656084658).epsilon(1e-12));
  CHECK(d.lb_p == doctest::Approx(0.19039296131893116).epsilon(1e-10));

  const auto dw = diagnostics({0.5, 1.0, 2.5}, 1);
  CHECK(dw.wasserstein == doctest::Approx(0.50085402047860905).epsilon(1e-12));
  CHECK(dw.ad_stat == doctest::Approx(0.5790099948128749).epsilon(1e-10));
}

TEST_CASE("Ljung-Box degeneracy is flagged instead of NaN") {
  const std::vector<double> constant(20, 1.0);
  const auto d = diagnostics(constant, 5);
  CHECK_FALSE(d.lb_valid);
  CHECK(d.lb_q == d.lb_q);  // not NaN
  CHECK_THROWS_AS(diagnostics({}, 5), DataError);
}

TEST_CASE("Kolmogorov survival function matches reference values") {
  CHECK(kolmogorov_sf(0.5) == doctest::Approx(0.9639452436648751).epsilon(1e-12));
  CHECK(kolmogorov_sf(1.0) == doctest::Approx(0.26999967167735456).epsilon(1e-12));
  CHECK(kolmogorov_sf(1.5) == doctest::Approx(0.022217962616525127).epsilon(1e-12));
  CHECK(kolmogorov_sf(0.1) == 1.0);
  // Both series reproduce the reference values on their own side of the 1.18
  // switch point (the function itself has slope approx -0.58 there, so the two
  // evaluations legitimately differ by about 1.2e-4).
  CHECK(kolmogorov_sf(1.1799) == doctest::Approx(0.123512049711887).epsilon(1e-12));
  CHECK(kolmogorov_sf(1.1801) == doctest::Approx(0.123395591619393).epsilon(1e-12));
}

TEST_CASE("two-sample KS matches a hand-checked example") {
  const auto [d, p] = ks_two_sample({0.1, 0.4, 0.8}, {0.2, 0.3, 0.9, 1.5});
  CHECK(d == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p == doctest::Approx(0.784769805922802).epsilon(1e-9));
}

TEST_CASE("exact W1 distance against Exp(1)") {
  CHECK(wasserstein_exp1({0.5, 1.0, 2.5}) ==
        doctest::Approx(0.50085402047860905).epsilon(1e-13));
  // Large Exp(1)-ish sample should be close to 0.
  std::vector<double> big;
  const int n = 20000;
  for (int i = 0; i < n; ++i) big.push_back(-std::log1p(-(i + 0.5) / n));
  CHECK(wasserstein_exp1(big) < 0.01);
}

TEST_CASE("QQ data uses midpoint plotting positions against Exp(1)") {
  const auto qq = qq_exponential({2.0, 0.5, 1.0});
  REQUIRE(qq.size() == 3);
  CHECK(qq[0].first == doctest::Approx(-std::log1p(-0.5 / 3.0)).epsilon(1e-14));
  CHECK(qq[0].second == 0.5);  // sorted sample on the second coordinate
  CHECK(qq[2].first == doctest::Approx(-std::log1p(-2.5 / 3.0)).epsilon(1e-14));
  CHECK(qq[2].second == 2.0);
}

TEST_CASE("empirical intensity buckets counts and averages across streams") {
  EventStream a;
  a.window = {0.0, 10.0};
  a.times = {0.5, 1.5, 1.7, 9.9};
  EventStream b;
  b.window = {0.0, 10.0};
  b.times = {0.1, 10.0};  // right edge lands in the last bucket
  const auto curve = empirical_intensity({a, b}, 5.0);
  CHECK(curve.dt == 5.0);
  REQUIRE(curve.values.size() == 2);
  // Bucket 0: (3 + 1) / 2 / 5s; bucket 1: (1 + 1) / 2 / 5s.
  CHECK(curve.values[0] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(curve.values[1] == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("signature surface counts squared ticks per sampling interval") {
  PricePath path;
  path.s0 = 100.0;
  path.mark_size = 1.0;
  path.window = {0.0, 4.0};
  path.jump_times = {1.0, 2.5, 3.0};
  path.jump_signs = {+1, -1, +1};
  const auto surf = signature_surface(path, {1.0, 0.5}, {4.0});
  REQUIRE(surf.size() == 1);
  REQUIRE(surf[0].size() == 2);
  // Delta = 1: increments (+1, 0, 0, 0) -> sum of squares 1. Delta = 0.5: the
  // down-tick at 2.5 and the recovery at 3.0 are both resolved -> sum 3.
  CHECK(surf[0][0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(surf[0][1] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("signature surface flattens at long sampling intervals for mean-reverting flow") {
  // Strong cross-excitation makes ticks mean-revert: C(small delta) > C(large delta).
  HawkesSpec spec;
  spec.kernel.P = 2;
  spec.kernel.alpha = {{{0.02, 0.20}, {0.20, 0.02}}};
  spec.kernel.beta = {{{0.5, 0.5}, {0.5, 0.5}}};
  spec.baselines = {Baseline::constant(0.08), Baseline::constant(0.08)};
  const auto ev = simulate_hawkes(spec, {0.0, 4.0 * 3600.0}, 555);
  const auto path = price_path_from_events(ev[0], ev[1], 100.0, 1.0);
  const auto surf = signature_surface(path, {1.0, 60.0, 600.0}, {4.0 * 3600.0});
  REQUIRE(surf[0].size() == 3);
  CHECK(surf[0][0] > surf[0][2]);
}

TEST_SUITE_END();
