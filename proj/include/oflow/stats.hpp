#pragma once

// Small statistical toolbox: normal distribution helpers, the regularized
// incomplete gamma function (chi-square tail probabilities), the asymptotic
// Kolmogorov distribution, and a bootstrap confidence interval for a mean.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "oflow/rng.hpp"

namespace oflow {

inline double normal_pdf(double x) {
  static const double kInvSqrt2Pi = 0.39894228040143267794;
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Upper tail P(Z > x), accurate in the far right tail.
inline double normal_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

namespace detail {

// Regularized lower incomplete gamma P(a, x) by series expansion (x < a + 1).
inline double gamma_p_series(double a, double x) {
  double sum = 1.0 / a;
  double term = sum;
  for (int n = 1; n < 500; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a, x) by continued fraction (x >= a + 1).
inline double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace detail

// Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a).
inline double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_p: bad arguments");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_cf(a, x);
}

// Chi-square distribution with k degrees of freedom.
inline double chi2_cdf(double x, double k) { return gamma_p(0.5 * k, 0.5 * x); }
inline double chi2_sf(double x, double k) { return 1.0 - chi2_cdf(x, k); }

// Survival function of the asymptotic Kolmogorov distribution,
//   Q(lambda) = 2 * sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2),
// with the theta-function dual series for small lambda where the alternating
// series converges slowly.
inline double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;  // indistinguishable from 1 below here
  if (lambda < 1.18) {
    // Dual series: Q = 1 - sqrt(2*pi)/lambda * sum_{k odd} exp(-k^2 pi^2 / (8 lambda^2)).
    const double v = std::exp(-M_PI * M_PI / (8.0 * lambda * lambda));
    const double sum = v + std::pow(v, 9.0) + std::pow(v, 25.0) + std::pow(v, 49.0);
    return 1.0 - std::sqrt(2.0 * M_PI) / lambda * sum;
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1) ? term : -term;
    if (term < 1e-18) break;
  }
  return std::max(0.0, 2.0 * sum);
}

// One-sample Kolmogorov-Smirnov statistic of `sorted` against a CDF given as a
// callable; `sorted` must be ascending.
template <typename Cdf>
double ks_statistic(const std::vector<double>& sorted, Cdf&& cdf) {
  const std::size_t n = sorted.size();
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = cdf(sorted[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

struct MeanCi {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

// Percentile bootstrap confidence interval for the mean of `x`.
inline MeanCi bootstrap_mean_ci(const std::vector<double>& x, double level,
                                int n_resamples, std::uint64_t seed) {
  if (x.empty()) throw std::invalid_argument("bootstrap_mean_ci: empty sample");
  MeanCi out;
  double s = 0.0;
  for (double v : x) s += v;
  out.mean = s / static_cast<double>(x.size());
  Rng rng(seed);
  std::vector<double> means(n_resamples);
  for (int b = 0; b < n_resamples; ++b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[rng.below(x.size())];
    means[b] = acc / static_cast<double>(x.size());
  }
  std::sort(means.begin(), means.end());
  const double alpha = 0.5 * (1.0 - level);
  auto pick = [&](double q) {
    const double pos = q * (n_resamples - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min<std::size_t>(lo + 1, n_resamples - 1);
    const double frac = pos - static_cast<double>(lo);
    return means[lo] * (1.0 - frac) + means[hi] * frac;
  };
  out.lo = pick(alpha);
  out.hi = pick(1.0 - alpha);
  return out;
}

}  // namespace oflow
