#include "oflow/hawkes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace oflow {

void KernelMatrix::validate() const {
  if (P != 1 && P != 2) throw ConfigError("kernel: P must be 1 or 2");
  for (int i = 0; i < P; ++i) {
    for (int j = 0; j < P; ++j) {
      if (!(alpha[i][j] >= 0.0)) throw ConfigError("kernel: alpha entries must be >= 0");
      if (!(beta[i][j] > 0.0)) throw ConfigError("kernel: beta entries must be > 0");
    }
  }
}

double KernelMatrix::spectral_radius() const {
  if (P == 1) return alpha[0][0] / beta[0][0];
  const double m00 = alpha[0][0] / beta[0][0];
  const double m01 = alpha[0][1] / beta[0][1];
  const double m10 = alpha[1][0] / beta[1][0];
  const double m11 = alpha[1][1] / beta[1][1];
  // Non-negative 2x2 matrix: the Perron root is the larger real eigenvalue and
  // the discriminant (m00 - m11)^2 + 4 m01 m10 is always non-negative.
  const double tr = m00 + m11;
  const double disc = (m00 - m11) * (m00 - m11) + 4.0 * m01 * m10;
  return 0.5 * (tr + std::sqrt(disc));
}

void HawkesSpec::validate() const {
  kernel.validate();
  if (static_cast<int>(baselines.size()) != kernel.P)
    throw ConfigError("spec: need one baseline per component");
  if (!(m1 > 0.0)) throw ConfigError("spec: mark mean m1 must be positive");
}

std::vector<MarkedEvent> merge_events(const std::vector<EventStream>& streams) {
  std::vector<MarkedEvent> merged;
  std::size_t total = 0;
  for (const auto& s : streams) total += s.times.size();
  merged.reserve(total);
  for (std::size_t c = 0; c < streams.size(); ++c) {
    double prev = -std::numeric_limits<double>::infinity();
    for (double t : streams[c].times) {
      if (!(t > prev)) throw DataError("unordered history: times must be strictly increasing");
      prev = t;
      merged.push_back({t, static_cast<int>(c)});
    }
  }
  std::sort(merged.begin(), merged.end(), [](const MarkedEvent& a, const MarkedEvent& b) {
    if (a.time != b.time) return a.time < b.time;
    return a.component < b.component;
  });
  return merged;
}

std::vector<double> intensity(const HawkesSpec& spec,
                              const std::vector<EventStream>& history, double t) {
  spec.validate();
  const int P = spec.kernel.P;
  if (static_cast<int>(history.size()) != P)
    throw ConfigError("intensity: history must have one stream per component");

  // S[p][m] = sum over events of component m before the sweep cursor of
  // exp(-beta_pm (cursor - tau)).
  double S[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  double cursor = 0.0;
  bool first = true;
  for (const MarkedEvent& ev : merge_events(history)) {
    if (!(ev.time < t)) break;
    if (first) {
      cursor = ev.time;
      first = false;
    }
    const double dt = ev.time - cursor;
    for (int p = 0; p < P; ++p)
      for (int m = 0; m < P; ++m) S[p][m] *= std::exp(-spec.kernel.beta[p][m] * dt);
    for (int p = 0; p < P; ++p) S[p][ev.component] += 1.0;
    cursor = ev.time;
  }

  std::vector<double> lambda(P);
  for (int p = 0; p < P; ++p) {
    double acc = spec.baselines[p].value(t);
    if (!first) {
      for (int m = 0; m < P; ++m)
        acc += spec.kernel.alpha[p][m] * S[p][m] * std::exp(-spec.kernel.beta[p][m] * (t - cursor));
    }
    lambda[p] = acc;
  }
  return lambda;
}

std::vector<double> compensator(const HawkesSpec& spec,
                                const std::vector<EventStream>& history, double a,
                                double b) {
  spec.validate();
  if (!(a <= b)) throw ConfigError("compensator: need a <= b");
  const int P = spec.kernel.P;
  if (static_cast<int>(history.size()) != P)
    throw ConfigError("compensator: history must have one stream per component");

  std::vector<double> out(P);
  for (int p = 0; p < P; ++p) {
    double acc = spec.baselines[p].integral(a, b);
    for (int m = 0; m < P; ++m) {
      const double alpha = spec.kernel.alpha[p][m];
      const double beta = spec.kernel.beta[p][m];
      if (alpha == 0.0) continue;
      for (double tau : history[m].times) {
        if (tau >= b) break;
        // Kernel mass of the event inside [a, b].
        const double hi = std::exp(-beta * (b - tau));
        const double lo = tau <= a ? std::exp(-beta * (a - tau)) : 1.0;
        acc += alpha / beta * (lo - hi);
      }
    }
    out[p] = acc;
  }
  return out;
}

bool is_symmetric(const KernelMatrix& k, double rel_tol) {
  if (k.P != 2) return false;
  auto close = [rel_tol](double x, double y) {
    return std::abs(x - y) <= rel_tol * std::max({1.0, std::abs(x), std::abs(y)});
  };
  return close(k.alpha[0][0], k.alpha[1][1]) && close(k.alpha[0][1], k.alpha[1][0]) &&
         close(k.beta[0][0], k.beta[0][1]) && close(k.beta[0][0], k.beta[1][0]) &&
         close(k.beta[0][0], k.beta[1][1]);
}

SymmetricKernel symmetric_reduction(const KernelMatrix& k) {
  k.validate();
  SymmetricKernel s;
  if (k.P == 1) {
    // Univariate fit: self-excitation only, no cross channel.
    s.alpha_s = k.alpha[0][0];
    s.alpha_c = 0.0;
    s.beta = k.beta[0][0];
    return s;
  }
  s.alpha_s = 0.5 * (k.alpha[0][0] + k.alpha[1][1]);
  s.alpha_c = 0.5 * (k.alpha[0][1] + k.alpha[1][0]);
  double weight = 0.0, acc = 0.0, plain = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      acc += k.alpha[i][j] * k.beta[i][j];
      weight += k.alpha[i][j];
      plain += k.beta[i][j];
    }
  }
  s.beta = weight > 0.0 ? acc / weight : plain / 4.0;
  return s;
}

SymmetricKernel as_symmetric(const KernelMatrix& k) {
  if (!is_symmetric(k))
    throw ConfigError("execution state requires a symmetric kernel; reduce the fit first");
  SymmetricKernel s;
  s.alpha_s = k.alpha[0][0];
  s.alpha_c = k.alpha[0][1];
  s.beta = k.beta[0][0];
  return s;
}

HawkesSpec symmetrize(const HawkesSpec& spec) {
  if (spec.kernel.P != 2) throw ConfigError("symmetrize: requires a bivariate spec");
  const SymmetricKernel k =
      is_symmetric(spec.kernel) ? as_symmetric(spec.kernel) : symmetric_reduction(spec.kernel);
  HawkesSpec out = spec;
  out.kernel.alpha = {{{k.alpha_s, k.alpha_c}, {k.alpha_c, k.alpha_s}}};
  out.kernel.beta = {{{k.beta, k.beta}, {k.beta, k.beta}}};
  return out;
}

namespace {

double baseline_sum(const HawkesSpec& spec, double t) {
  return spec.baselines[0].value(t) + spec.baselines[1].value(t);
}

double baseline_diff(const HawkesSpec& spec, double t) {
  return spec.baselines[0].value(t) - spec.baselines[1].value(t);
}

}  // namespace

ExecState advance_exec_state(const HawkesSpec& spec, ExecState state,
                             const std::vector<MarkedEvent>& events, double t) {
  const SymmetricKernel k = as_symmetric(spec.kernel);
  const double jump_kappa = k.imbalance_jump();
  const double jump_gamma = k.alpha_s + k.alpha_c;

  double theta = state.theta;
  double gk = state.gamma_kernel;
  double cursor = state.last_time;
  for (const MarkedEvent& ev : events) {
    if (ev.time < cursor || ev.time > t)
      throw ConfigError("advance_exec_state: events must lie in (last_time, t]");
    const double decay = std::exp(-k.beta * (ev.time - cursor));
    theta *= decay;
    gk *= decay;
    theta += ev.component == 0 ? jump_kappa : -jump_kappa;
    gk += jump_gamma;
    cursor = ev.time;
  }
  const double decay = std::exp(-k.beta * (t - cursor));
  theta *= decay;
  gk *= decay;

  ExecState out;
  out.theta = theta;
  out.gamma_kernel = gk;
  out.last_time = t;
  out.kappa = baseline_diff(spec, t) + theta;
  out.gamma = baseline_sum(spec, t) + gk;
  return out;
}

ExecState exec_state(const HawkesSpec& spec, const std::vector<EventStream>& history,
                     double t) {
  spec.validate();
  if (spec.kernel.P != 2 || history.size() != 2)
    throw ConfigError("exec_state: requires the bivariate (buy, sell) model");

  ExecState state;
  state.last_time = 0.0;
  state.kappa = baseline_diff(spec, 0.0);
  state.gamma = baseline_sum(spec, 0.0);

  std::vector<MarkedEvent> events;
  for (const MarkedEvent& ev : merge_events(history)) {
    if (ev.time < t) events.push_back(ev);  // left-limit convention
  }
  return advance_exec_state(spec, state, events, t);
}

}  // namespace oflow
