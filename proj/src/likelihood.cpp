#include "oflow/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "oflow/quadrature.hpp"

namespace oflow {

namespace {

int baseline_param_count(const Baseline& b) {
  switch (b.kind()) {
    case Baseline::Kind::Constant:
      return 1;
    case Baseline::Kind::Piecewise:
      return static_cast<int>(b.piecewise_rates().size());
    case Baseline::Kind::Spline:
      return b.spline_data().n_basis;
  }
  return 0;
}

// Per-(target m, source n) decay-recursion sweep.
//   R(k)  = sum_{t_i^n < t_k} exp(-beta (t_k - t_i))
//   R1(k) = sum (t_k - t_i)   exp(-beta (t_k - t_i))
//   R2(k) = sum (t_k - t_i)^2 exp(-beta (t_k - t_i))
// plus the kernel tail sums over all source events with Delta = T - t_i:
//   A = sum (1 - exp(-beta Delta)), B = sum Delta exp(-beta Delta),
//   C = sum Delta^2 exp(-beta Delta).
struct KernelSweep {
  std::vector<double> R, R1, R2;
  double A = 0.0, B = 0.0, C = 0.0;
};

KernelSweep sweep_kernel(const std::vector<double>& target, const std::vector<double>& source,
                         double beta, double horizon, bool want_derivs) {
  KernelSweep out;
  const std::size_t K = target.size();
  out.R.assign(K, 0.0);
  if (want_derivs) {
    out.R1.assign(K, 0.0);
    out.R2.assign(K, 0.0);
  }

  std::size_t i = 0;  // source cursor: events with t_i < t_k already absorbed
  double R = 0.0, R1 = 0.0, R2 = 0.0;
  double prev_t = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const double tk = target[k];
    if (k > 0) {
      // Decay the state accumulated at the previous target event.
      const double dt = tk - prev_t;
      const double decay = std::exp(-beta * dt);
      if (want_derivs) {
        R2 = decay * (R2 + 2.0 * dt * R1 + dt * dt * R);
        R1 = decay * (R1 + dt * R);
      }
      R *= decay;
    }
    // Absorb source events since the previous target event (strictly before tk).
    for (; i < source.size() && source[i] < tk; ++i) {
      const double u = tk - source[i];
      const double e = std::exp(-beta * u);
      R += e;
      if (want_derivs) {
        R1 += u * e;
        R2 += u * u * e;
      }
    }
    out.R[k] = R;
    if (want_derivs) {
      out.R1[k] = R1;
      out.R2[k] = R2;
    }
    prev_t = tk;
  }

  for (double ti : source) {
    const double d = horizon - ti;
    if (d < 0.0) continue;
    const double e = std::exp(-beta * d);
    out.A += 1.0 - e;
    if (want_derivs) {
      out.B += d * e;
      out.C += d * d * e;
    }
  }
  return out;
}

// Integral of lambda_inf(t) * f_i(t) (and optionally * f_j(t)) over the window
// for a spline baseline, split at the bump-support knots.
double spline_weighted_integral(const Baseline& base, int i, int j, const TimeWindow& win) {
  const SplineBaseline& sp = base.spline_data();
  const double w = sp.width();
  auto support = [&](int idx) {
    return std::pair<double, double>{sp.window.begin + (idx - 4) * w,
                                     sp.window.begin + idx * w};
  };
  auto [ai, bi] = support(i);
  double lo = std::max(ai, win.begin);
  double hi = std::min(bi, win.end);
  if (j > 0) {
    auto [aj, bj] = support(j);
    lo = std::max(lo, aj);
    hi = std::min(hi, bj);
  }
  if (!(hi > lo)) return 0.0;
  auto f = [&](double t) {
    double v = base.value(t) * cosine_basis(i, t, sp);
    if (j > 0) v *= cosine_basis(j, t, sp);
    return v;
  };
  return integrate_with_breakpoints(f, lo, hi, base.knots(), 1e-10);
}

void check_inputs(const HawkesSpec& spec, const std::vector<EventStream>& events) {
  spec.validate();
  if (static_cast<int>(events.size()) != spec.kernel.P)
    throw ConfigError("likelihood: need one stream per component");
  for (const EventStream& s : events) s.validate();
  for (std::size_t c = 1; c < events.size(); ++c) {
    if (std::abs(events[c].window.length() - events[0].window.length()) > 1e-9)
      throw ConfigError("likelihood: streams must share one window");
  }
}

}  // namespace

ParamLayout layout_of(const HawkesSpec& spec) {
  ParamLayout layout;
  layout.P = spec.kernel.P;
  int cursor = 0;
  for (int m = 0; m < layout.P; ++m) {
    const int nb = baseline_param_count(spec.baselines[m]);
    layout.baseline_size.push_back(nb);
    layout.offset.push_back(cursor);
    const std::string cm = "c" + std::to_string(m) + ".";
    switch (spec.baselines[m].kind()) {
      case Baseline::Kind::Constant:
        layout.names.push_back(cm + "lambda_inf");
        break;
      case Baseline::Kind::Piecewise:
        for (int j = 0; j < nb; ++j) layout.names.push_back(cm + "rate" + std::to_string(j));
        break;
      case Baseline::Kind::Spline:
        for (int j = 1; j <= nb; ++j) layout.names.push_back(cm + "xi" + std::to_string(j));
        break;
    }
    for (int n = 0; n < layout.P; ++n)
      layout.names.push_back(cm + "alpha" + std::to_string(n));
    for (int n = 0; n < layout.P; ++n)
      layout.names.push_back(cm + "beta" + std::to_string(n));
    cursor += nb + 2 * layout.P;
  }
  layout.total = cursor;
  return layout;
}

std::vector<double> pack_params(const HawkesSpec& spec) {
  const ParamLayout layout = layout_of(spec);
  std::vector<double> theta(layout.total);
  for (int m = 0; m < layout.P; ++m) {
    int at = layout.offset[m];
    const Baseline& b = spec.baselines[m];
    switch (b.kind()) {
      case Baseline::Kind::Constant:
        theta[at++] = b.constant_rate();
        break;
      case Baseline::Kind::Piecewise:
        for (double r : b.piecewise_rates()) theta[at++] = r;
        break;
      case Baseline::Kind::Spline:
        for (double x : b.spline_data().coeffs) theta[at++] = x;
        break;
    }
    for (int n = 0; n < layout.P; ++n) theta[at++] = spec.kernel.alpha[m][n];
    for (int n = 0; n < layout.P; ++n) theta[at++] = spec.kernel.beta[m][n];
  }
  return theta;
}

HawkesSpec unpack_params(const HawkesSpec& prototype, const std::vector<double>& theta) {
  const ParamLayout layout = layout_of(prototype);
  if (static_cast<int>(theta.size()) != layout.total)
    throw ConfigError("unpack_params: wrong parameter count");
  HawkesSpec spec = prototype;
  for (int m = 0; m < layout.P; ++m) {
    int at = layout.offset[m];
    const Baseline& proto = prototype.baselines[m];
    switch (proto.kind()) {
      case Baseline::Kind::Constant:
        spec.baselines[m] = Baseline::constant(theta[at++]);
        break;
      case Baseline::Kind::Piecewise: {
        std::vector<double> rates(theta.begin() + at,
                                  theta.begin() + at + layout.baseline_size[m]);
        at += layout.baseline_size[m];
        spec.baselines[m] = Baseline::piecewise(proto.piecewise_breakpoints(), rates);
        break;
      }
      case Baseline::Kind::Spline: {
        SplineBaseline sp = proto.spline_data();
        sp.coeffs.assign(theta.begin() + at, theta.begin() + at + sp.n_basis);
        at += sp.n_basis;
        spec.baselines[m] = Baseline::spline(sp);
        break;
      }
    }
    for (int n = 0; n < layout.P; ++n) spec.kernel.alpha[m][n] = theta[at++];
    for (int n = 0; n < layout.P; ++n) spec.kernel.beta[m][n] = theta[at++];
  }
  return spec;
}

double log_likelihood(const HawkesSpec& spec, const std::vector<EventStream>& events) {
  check_inputs(spec, events);
  const int P = spec.kernel.P;
  const TimeWindow win = events[0].window;

  double total = 0.0;
  for (int m = 0; m < P; ++m) {
    const std::vector<double>& target = events[m].times;
    double lm = -spec.baselines[m].integral(win.begin, win.end);

    std::vector<KernelSweep> sweeps(P);
    for (int n = 0; n < P; ++n) {
      sweeps[n] = sweep_kernel(target, events[n].times, spec.kernel.beta[m][n], win.end,
                               /*want_derivs=*/false);
      lm -= spec.kernel.alpha[m][n] / spec.kernel.beta[m][n] * sweeps[n].A;
    }
    for (std::size_t k = 0; k < target.size(); ++k) {
      double D = spec.baselines[m].value(target[k]);
      for (int n = 0; n < P; ++n) D += spec.kernel.alpha[m][n] * sweeps[n].R[k];
      if (!(D > 0.0)) return -std::numeric_limits<double>::infinity();
      lm += std::log(D);
    }
    total += lm;
  }
  return total;
}

LikelihoodDerivatives grad_hessian(const HawkesSpec& spec,
                                   const std::vector<EventStream>& events,
                                   bool want_hessian) {
  check_inputs(spec, events);
  const int P = spec.kernel.P;
  const TimeWindow win = events[0].window;
  const ParamLayout layout = layout_of(spec);

  LikelihoodDerivatives out;
  out.gradient.assign(layout.total, 0.0);
  out.hessian.assign(layout.total, std::vector<double>(layout.total, 0.0));

  for (int m = 0; m < P; ++m) {
    const Baseline& base = spec.baselines[m];
    const std::vector<double>& target = events[m].times;
    const int nb = layout.baseline_size[m];
    const int local_n = nb + 2 * P;  // this component's parameter block size
    const int off = layout.offset[m];
    const int a_off = nb;            // local index of alpha_m0
    const int b_off = nb + P;        // local index of beta_m0

    std::vector<KernelSweep> sw(P);
    for (int n = 0; n < P; ++n)
      sw[n] = sweep_kernel(target, events[n].times, spec.kernel.beta[m][n], win.end, true);

    // --- Integral (compensator) parts -------------------------------------
    out.loglik -= base.integral(win.begin, win.end);
    std::vector<double> grad(local_n, 0.0);
    std::vector<std::vector<double>> hess(local_n, std::vector<double>(local_n, 0.0));

    switch (base.kind()) {
      case Baseline::Kind::Constant:
        grad[0] -= win.length();
        break;
      case Baseline::Kind::Piecewise: {
        const auto& edges = base.piecewise_breakpoints();
        for (int j = 0; j < nb; ++j) {
          const double lo = std::max(win.begin, edges[j]);
          const double hi = std::min(win.end, edges[j + 1]);
          if (hi > lo) grad[j] -= hi - lo;
        }
        break;
      }
      case Baseline::Kind::Spline: {
        for (int i = 1; i <= nb; ++i) {
          grad[i - 1] -= spline_weighted_integral(base, i, 0, win);
          if (want_hessian) {
            for (int j = i; j <= std::min(nb, i + 3); ++j) {
              const double I = spline_weighted_integral(base, i, j, win);
              hess[i - 1][j - 1] -= I;
              if (j != i) hess[j - 1][i - 1] -= I;
            }
          }
        }
        break;
      }
    }

    for (int n = 0; n < P; ++n) {
      const double alpha = spec.kernel.alpha[m][n];
      const double beta = spec.kernel.beta[m][n];
      const double A = sw[n].A, B = sw[n].B, C = sw[n].C;
      out.loglik -= alpha / beta * A;
      grad[a_off + n] -= A / beta;
      grad[b_off + n] += alpha * A / (beta * beta) - alpha * B / beta;
      if (want_hessian) {
        const double dab = A / (beta * beta) - B / beta;
        hess[a_off + n][b_off + n] += dab;
        hess[b_off + n][a_off + n] += dab;
        hess[b_off + n][b_off + n] +=
            -2.0 * alpha * A / (beta * beta * beta) + 2.0 * alpha * B / (beta * beta) +
            alpha * C / beta;
      }
    }

    // --- Event (log-intensity) parts ---------------------------------------
    // Per event: D = lambda_inf(t_k) + sum_n alpha R_n(k); the gradient adds
    // dD/D and the Hessian d2D/D - (dD outer dD)/D^2.
    std::vector<double> dD(local_n);
    bool degenerate = false;
    for (std::size_t k = 0; k < target.size() && !degenerate; ++k) {
      const double t = target[k];
      const double b_val = base.value(t);
      double D = b_val;
      for (int n = 0; n < P; ++n) D += spec.kernel.alpha[m][n] * sw[n].R[k];
      if (!(D > 0.0)) {
        degenerate = true;
        break;
      }
      out.loglik += std::log(D);
      const double invD = 1.0 / D;
      const double invD2 = invD * invD;

      std::fill(dD.begin(), dD.end(), 0.0);
      switch (base.kind()) {
        case Baseline::Kind::Constant:
          dD[0] = 1.0;
          break;
        case Baseline::Kind::Piecewise: {
          const auto& edges = base.piecewise_breakpoints();
          auto it = std::upper_bound(edges.begin(), edges.end(), t);
          int j = static_cast<int>(it - edges.begin()) - 1;
          j = std::max(0, std::min(j, nb - 1));
          dD[j] = 1.0;
          break;
        }
        case Baseline::Kind::Spline:
          for (const auto& [i, f] : base.basis_values(t)) dD[i - 1] = b_val * f;
          break;
      }
      for (int n = 0; n < P; ++n) {
        dD[a_off + n] = sw[n].R[k];
        dD[b_off + n] = -spec.kernel.alpha[m][n] * sw[n].R1[k];
      }

      for (int i = 0; i < local_n; ++i) grad[i] += dD[i] * invD;

      if (want_hessian) {
        for (int i = 0; i < local_n; ++i) {
          if (dD[i] == 0.0) continue;
          for (int j = i; j < local_n; ++j) {
            if (dD[j] == 0.0) continue;
            const double v = -dD[i] * dD[j] * invD2;
            hess[i][j] += v;
            if (j != i) hess[j][i] += v;
          }
        }
        // Non-zero second derivatives of D itself.
        if (base.kind() == Baseline::Kind::Spline) {
          const auto active = base.basis_values(t);
          for (const auto& [i, fi] : active) {
            for (const auto& [j, fj] : active) {
              hess[i - 1][j - 1] += b_val * fi * fj * invD;
            }
          }
        }
        for (int n = 0; n < P; ++n) {
          const double v = -sw[n].R1[k] * invD;  // d2D/(dalpha_n dbeta_n) = -R1
          hess[a_off + n][b_off + n] += v;
          hess[b_off + n][a_off + n] += v;
          hess[b_off + n][b_off + n] += spec.kernel.alpha[m][n] * sw[n].R2[k] * invD;
        }
      }
    }

    if (degenerate) {
      out.loglik = -std::numeric_limits<double>::infinity();
      std::fill(out.gradient.begin(), out.gradient.end(), 0.0);
      for (auto& row : out.hessian) std::fill(row.begin(), row.end(), 0.0);
      return out;
    }

    for (int i = 0; i < local_n; ++i) {
      out.gradient[off + i] += grad[i];
      if (want_hessian) {
        for (int j = 0; j < local_n; ++j) out.hessian[off + i][off + j] += hess[i][j];
      }
    }
  }
  return out;
}

}  // namespace oflow
