#include "oflow/gof.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "oflow/common.hpp"
#include "oflow/stats.hpp"

namespace oflow {

namespace {

// Exp(1) CDF, numerically stable near zero.
double exp1_cdf(double x) { return -std::expm1(-x); }

}  // namespace

std::vector<std::vector<double>> time_change_residuals(
    const HawkesSpec& spec, const std::vector<EventStream>& events) {
  spec.validate();
  if (events.size() != static_cast<std::size_t>(spec.kernel.P)) {
    throw ConfigError("time_change_residuals: expected " + std::to_string(spec.kernel.P) +
                      " event streams, got " + std::to_string(events.size()));
  }
  for (const auto& s : events) s.validate();

  const int P = spec.kernel.P;
  std::vector<std::vector<double>> out(static_cast<std::size_t>(P));

  for (int m = 0; m < P; ++m) {
    const auto& targets = events[static_cast<std::size_t>(m)].times;
    if (targets.size() < 2) continue;
    out[static_cast<std::size_t>(m)].reserve(targets.size() - 1);

    const Baseline& base = spec.baselines[static_cast<std::size_t>(m)];
    // Decayed kernel state per source component, maintained at the current
    // left edge of the integration interval.
    std::vector<double> state(static_cast<std::size_t>(P), 0.0);
    std::vector<std::size_t> idx(static_cast<std::size_t>(P), 0);

    double a = events[static_cast<std::size_t>(m)].window.begin;
    // advance_source moves source n's state from time `a` to time `b`,
    // returning the kernel mass integral(alpha e^{-beta(s-t_i)}) over (a, b]
    // summed over that source's events up to b.
    auto advance_source = [&](int n, double from, double to) -> double {
      const double alpha = spec.kernel.alpha[m][n];
      const double beta = spec.kernel.beta[m][n];
      const auto& src = events[static_cast<std::size_t>(n)].times;
      std::size_t& i = idx[static_cast<std::size_t>(n)];
      double& s = state[static_cast<std::size_t>(n)];
      const double decay = std::exp(-beta * (to - from));
      double mass = s * -std::expm1(-beta * (to - from));
      s *= decay;
      while (i < src.size() && src[i] <= to) {
        const double u = to - src[i];
        mass += -std::expm1(-beta * u);
        s += std::exp(-beta * u);
        ++i;
      }
      return (alpha / beta) * mass;
    };

    // Warm up the state to the first target event (mass before it is not a
    // residual: residuals are inter-event integrals only).
    for (int n = 0; n < P; ++n) advance_source(n, a, targets.front());
    a = targets.front();

    for (std::size_t k = 1; k < targets.size(); ++k) {
      const double b = targets[k];
      double lambda_int = base.integral(a, b);
      for (int n = 0; n < P; ++n) lambda_int += advance_source(n, a, b);
      out[static_cast<std::size_t>(m)].push_back(lambda_int);
      a = b;
    }
  }
  return out;
}

DiagnosticsReport diagnostics(const std::vector<double>& residuals, int lags, double aic) {
  if (residuals.empty()) throw DataError("diagnostics: empty residual series");
  for (double r : residuals) {
    if (!(r >= 0.0) || !std::isfinite(r)) {
      throw DataError("diagnostics: residuals must be finite and non-negative");
    }
  }
  const std::size_t n = residuals.size();
  const double dn = static_cast<double>(n);

  std::vector<double> sorted = residuals;
  std::sort(sorted.begin(), sorted.end());

  DiagnosticsReport rep;
  rep.aic = aic;

  // One-sample Kolmogorov-Smirnov against Exp(1).
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = exp1_cdf(sorted[i]);
    d = std::max(d, u - static_cast<double>(i) / dn);
    d = std::max(d, static_cast<double>(i + 1) / dn - u);
  }
  rep.ks_stat = d;
  rep.ks_p = kolmogorov_sf(std::sqrt(dn) * d);

  // Anderson-Darling against the fully specified Exp(1).
  {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double u_lo = exp1_cdf(sorted[i]);
      double u_hi = exp1_cdf(sorted[n - 1 - i]);
      u_lo = std::min(std::max(u_lo, 1e-300), 1.0 - 1e-16);
      u_hi = std::min(std::max(u_hi, 1e-300), 1.0 - 1e-16);
      acc += (2.0 * static_cast<double>(i) + 1.0) *
             (std::log(u_lo) + std::log1p(-u_hi));
    }
    rep.ad_stat = -dn - acc / dn;
  }

  // Ljung-Box on the residual sequence in arrival order.
  {
    const int h = std::min<int>(lags, static_cast<int>(n) - 1);
    double mean = 0.0;
    for (double r : residuals) mean += r;
    mean /= dn;
    double var = 0.0;
    for (double r : residuals) var += (r - mean) * (r - mean);
    if (h >= 1 && var > 0.0) {
      double q = 0.0;
      for (int k = 1; k <= h; ++k) {
        double acc = 0.0;
        for (std::size_t t = static_cast<std::size_t>(k); t < n; ++t) {
          acc += (residuals[t] - mean) * (residuals[t - static_cast<std::size_t>(k)] - mean);
        }
        const double rk = acc / var;
        q += rk * rk / (dn - static_cast<double>(k));
      }
      q *= dn * (dn + 2.0);
      rep.lb_q = q;
      rep.lb_p = chi2_sf(q, static_cast<double>(h));
      rep.lb_lags = h;
      rep.lb_valid = true;
    } else {
      rep.lb_valid = false;
      rep.lb_lags = h > 0 ? h : 0;
    }
  }

  rep.wasserstein = wasserstein_exp1(sorted);
  return rep;
}

std::pair<double, double> ks_two_sample(const std::vector<double>& a,
                                        const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw DataError("ks_two_sample: empty sample");
  std::vector<double> sa = a, sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());

  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < sa.size() && j < sb.size()) {
    const double x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] <= x) ++i;
    while (j < sb.size() && sb[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double n_eff = na * nb / (na + nb);
  return {d, kolmogorov_sf(std::sqrt(n_eff) * d)};
}

double wasserstein_exp1(std::vector<double> sample) {
  if (sample.empty()) throw DataError("wasserstein_exp1: empty sample");
  std::sort(sample.begin(), sample.end());
  if (sample.front() < 0.0) throw DataError("wasserstein_exp1: negative value");
  const std::size_t n = sample.size();
  const double dn = static_cast<double>(n);

  // Integral of |F_exp - F_emp| over a segment [lo, hi) where F_emp = c.
  // g(x) = (1 - c) - e^{-x} is increasing; split at its root when interior.
  auto piece = [](double lo, double hi, double c) -> double {
    if (hi <= lo) return 0.0;
    auto signed_part = [c](double x0, double x1) {
      return (1.0 - c) * (x1 - x0) - (std::exp(-x0) - std::exp(-x1));
    };
    const double g_lo = (1.0 - c) - std::exp(-lo);
    const double g_hi = (1.0 - c) - std::exp(-hi);
    if (g_lo >= 0.0) return signed_part(lo, hi);
    if (g_hi <= 0.0) return -signed_part(lo, hi);
    const double star = -std::log(1.0 - c);
    return -signed_part(lo, star) + signed_part(star, hi);
  };

  double w = piece(0.0, sample[0], 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    w += piece(sample[i], sample[i + 1], static_cast<double>(i + 1) / dn);
  }
  // Tail beyond the largest observation: F_emp = 1, so the gap is e^{-x}.
  w += std::exp(-sample.back());
  return w;
}

std::vector<std::pair<double, double>> qq_exponential(std::vector<double> sample) {
  if (sample.empty()) throw DataError("qq_exponential: empty sample");
  std::sort(sample.begin(), sample.end());
  const double dn = static_cast<double>(sample.size());
  std::vector<std::pair<double, double>> out;
  out.reserve(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double p = (static_cast<double>(i) + 0.5) / dn;
    out.emplace_back(-std::log1p(-p), sample[i]);
  }
  return out;
}

StepCurve empirical_intensity(const std::vector<EventStream>& streams, double dt) {
  if (!(dt > 0.0)) throw ConfigError("empirical_intensity: dt must be positive");
  if (streams.empty()) throw DataError("empirical_intensity: no streams");
  const double len = streams.front().window.length();
  for (const auto& s : streams) {
    s.validate();
    if (std::abs(s.window.length() - len) > 1e-9) {
      throw ConfigError("empirical_intensity: streams have unequal window lengths");
    }
  }
  const std::size_t nb =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len / dt - 1e-9)));

  StepCurve curve;
  curve.dt = dt;
  curve.values.assign(nb, 0.0);
  for (const auto& s : streams) {
    for (double t : s.times) {
      double rel = t - s.window.begin;
      auto k = static_cast<std::size_t>(rel / dt);
      if (k >= nb) k = nb - 1;  // right window edge falls into the last bucket
      curve.values[k] += 1.0;
    }
  }
  const double n_streams = static_cast<double>(streams.size());
  for (std::size_t k = 0; k < nb; ++k) {
    const double width = std::min(dt, len - static_cast<double>(k) * dt);
    curve.values[k] /= width * n_streams;
  }
  return curve;
}

std::vector<std::vector<double>> signature_surface(const PricePath& path,
                                                   const std::vector<double>& deltas,
                                                   const std::vector<double>& horizons) {
  for (double d : deltas) {
    if (!(d > 0.0)) throw ConfigError("signature_surface: sampling intervals must be positive");
  }
  const double len = path.window.length();
  for (double h : horizons) {
    if (!(h > 0.0) || h > len * (1.0 + 1e-12)) {
      throw ConfigError("signature_surface: horizons must lie within the path window");
    }
  }
  std::vector<std::vector<double>> out(horizons.size(),
                                       std::vector<double>(deltas.size(), 0.0));
  for (std::size_t r = 0; r < horizons.size(); ++r) {
    for (std::size_t c = 0; c < deltas.size(); ++c) {
      const double delta = deltas[c];
      const auto steps = static_cast<std::size_t>(horizons[r] / delta + 1e-9);
      double prev = path.value_at(path.window.begin);
      double acc = 0.0;
      for (std::size_t k = 1; k <= steps; ++k) {
        const double cur = path.value_at(path.window.begin + static_cast<double>(k) * delta);
        acc += (cur - prev) * (cur - prev);
        prev = cur;
      }
      out[r][c] = acc;
    }
  }
  return out;
}

}  // namespace oflow
