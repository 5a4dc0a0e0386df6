#include "oflow/fit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oflow/lbfgs.hpp"

namespace oflow {

namespace {

// Least-squares projection of a target log-rate curve onto the cosine-bump
// basis: solves the (ridge-stabilized) normal equations by Gaussian
// elimination. Small dense system, N_basis <= a few dozen.
std::vector<double> project_log_rate(const SplineBaseline& proto,
                                     const std::vector<double>& t,
                                     const std::vector<double>& y) {
  const int n = proto.n_basis;
  std::vector<std::vector<double>> ata(n, std::vector<double>(n, 0.0));
  std::vector<double> aty(n, 0.0);
  for (std::size_t s = 0; s < t.size(); ++s) {
    std::vector<double> f(n);
    for (int i = 0; i < n; ++i) f[i] = cosine_basis(i + 1, t[s], proto);
    for (int i = 0; i < n; ++i) {
      if (f[i] == 0.0) continue;
      aty[i] += f[i] * y[s];
      for (int j = 0; j < n; ++j) ata[i][j] += f[i] * f[j];
    }
  }
  for (int i = 0; i < n; ++i) ata[i][i] += 1e-8;

  // Gaussian elimination with partial pivoting.
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(ata[r][col]) > std::abs(ata[pivot][col])) pivot = r;
    std::swap(ata[col], ata[pivot]);
    std::swap(aty[col], aty[pivot]);
    const double p = ata[col][col];
    for (int r = col + 1; r < n; ++r) {
      const double factor = ata[r][col] / p;
      if (factor == 0.0) continue;
      for (int c = col; c < n; ++c) ata[r][c] -= factor * ata[col][c];
      aty[r] -= factor * aty[col];
    }
  }
  std::vector<double> xi(n, 0.0);
  for (int r = n - 1; r >= 0; --r) {
    double acc = aty[r];
    for (int c = r + 1; c < n; ++c) acc -= ata[r][c] * xi[c];
    xi[r] = acc / ata[r][r];
  }
  return xi;
}

// Build the prototype spec for one multi-start point.
HawkesSpec make_start(const std::vector<EventStream>& events, const FitConfig& cfg,
                      int P, bool poisson, double ratio, double beta0) {
  const TimeWindow win = events[0].window;
  HawkesSpec spec;
  spec.kernel.P = P;
  spec.m1 = cfg.m1;
  const double branching = poisson ? 0.0 : (P == 1 ? ratio : 1.5 * ratio);
  for (int i = 0; i < P; ++i) {
    for (int j = 0; j < P; ++j) {
      spec.kernel.beta[i][j] = beta0;
      if (poisson) {
        spec.kernel.alpha[i][j] = 0.0;
      } else {
        spec.kernel.alpha[i][j] = (i == j ? ratio : 0.5 * ratio) * beta0;
      }
    }
  }

  for (int m = 0; m < P; ++m) {
    const std::vector<double>& times = events[m].times;
    const double n = static_cast<double>(times.size());
    const double base_rate =
        std::max(n / win.length() * (1.0 - std::min(branching, 0.9)), 1e-12);
    switch (cfg.baseline) {
      case Baseline::Kind::Constant:
        spec.baselines.push_back(Baseline::constant(base_rate));
        break;
      case Baseline::Kind::Piecewise: {
        std::vector<double> edges, rates;
        const int K = std::max(1, cfg.n_piecewise);
        for (int j = 0; j <= K; ++j)
          edges.push_back(win.begin + win.length() * j / K);
        for (int j = 0; j < K; ++j) {
          const double lo = edges[j], hi = edges[j + 1];
          double count = 0.0;
          for (double t : times)
            if (t >= lo && (t < hi || j == K - 1)) count += 1.0;
          rates.push_back(std::max(
              std::max(count, 0.5) / (hi - lo) * (1.0 - std::min(branching, 0.9)), 1e-12));
        }
        spec.baselines.push_back(Baseline::piecewise(edges, rates));
        break;
      }
      case Baseline::Kind::Spline: {
        SplineBaseline sp;
        sp.n_basis = cfg.n_basis;
        sp.window = win;
        sp.coeffs.assign(cfg.n_basis, 0.0);
        // Bin the empirical rate and project its log onto the basis.
        const int bins = std::max(2 * cfg.n_basis, 8);
        std::vector<double> centers(bins), logs(bins);
        const double bw = win.length() / bins;
        std::vector<double> counts(bins, 0.0);
        for (double t : times) {
          auto k = static_cast<std::size_t>((t - win.begin) / bw);
          counts[std::min<std::size_t>(k, bins - 1)] += 1.0;
        }
        for (int b = 0; b < bins; ++b) {
          centers[b] = win.begin + (b + 0.5) * bw;
          logs[b] = std::log(std::max(counts[b], 0.5) / bw *
                             (1.0 - std::min(branching, 0.9)));
        }
        sp.coeffs = project_log_rate(sp, centers, logs);
        for (double& c : sp.coeffs)
          c = std::min(cfg.log_bound, std::max(-cfg.log_bound, c));
        spec.baselines.push_back(Baseline::spline(sp));
        break;
      }
    }
  }
  spec.validate();
  return spec;
}

// Spectral-radius penalty keeping fits inside the stationarity region, with
// its gradient in natural (alpha, beta) space.
struct StabilityPenalty {
  double value = 0.0;
  double d_alpha[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  double d_beta[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
};

StabilityPenalty stability_penalty(const KernelMatrix& k) {
  constexpr double kLimit = 1.0 - 1e-6;
  constexpr double kWeight = 1e8;
  StabilityPenalty out;
  const double rho = k.spectral_radius();
  if (rho <= kLimit) return out;

  const double excess = rho - kLimit;
  out.value = kWeight * excess * excess;
  const double scale = 2.0 * kWeight * excess;  // d penalty / d rho

  // d rho / d M_ij for the 2x2 Perron root (or the trivial 1x1 case), then
  // chain through M_ij = alpha_ij / beta_ij.
  double dM[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  if (k.P == 1) {
    dM[0][0] = 1.0;
  } else {
    const double m00 = k.alpha[0][0] / k.beta[0][0];
    const double m01 = k.alpha[0][1] / k.beta[0][1];
    const double m10 = k.alpha[1][0] / k.beta[1][0];
    const double m11 = k.alpha[1][1] / k.beta[1][1];
    const double disc = (m00 - m11) * (m00 - m11) + 4.0 * m01 * m10;
    const double root = std::sqrt(std::max(disc, 1e-30));
    dM[0][0] = 0.5 + 0.5 * (m00 - m11) / root;
    dM[1][1] = 0.5 - 0.5 * (m00 - m11) / root;
    dM[0][1] = m10 / root;
    dM[1][0] = m01 / root;
  }
  for (int i = 0; i < k.P; ++i) {
    for (int j = 0; j < k.P; ++j) {
      out.d_alpha[i][j] = scale * dM[i][j] / k.beta[i][j];
      out.d_beta[i][j] = -scale * dM[i][j] * k.alpha[i][j] / (k.beta[i][j] * k.beta[i][j]);
    }
  }
  return out;
}

}  // namespace

FitResult fit_mle(const std::vector<EventStream>& events, const FitConfig& cfg,
                  const std::string& data_id) {
  const bool poisson = cfg.model == FitConfig::Model::Poisson;
  int P = 1;
  switch (cfg.model) {
    case FitConfig::Model::Univariate:
      P = 1;
      break;
    case FitConfig::Model::Bivariate:
      P = 2;
      break;
    case FitConfig::Model::Poisson:
      P = static_cast<int>(events.size());
      break;
  }
  if (static_cast<int>(events.size()) != P)
    throw ConfigError("fit_mle: stream count does not match the model");
  for (const EventStream& s : events) {
    if (s.times.size() < 10)
      throw DataError("fit_mle: need at least 10 events per component");
  }

  // Multi-start grid: branching ratio x beta, plus a midpoint start.
  struct Start {
    double ratio, beta;
  };
  std::vector<Start> starts = {{0.2, 0.1}, {0.2, 1.0}, {0.5, 0.1}, {0.5, 1.0}, {0.35, 0.316}};
  const int n_starts = std::max(1, cfg.restarts);
  while (static_cast<int>(starts.size()) < n_starts) {
    // Deterministic extension of the grid for restarts > 5.
    const std::size_t k = starts.size();
    starts.push_back({0.15 + 0.07 * static_cast<double>(k % 9),
                      0.05 * static_cast<double>(1 + (k * 3) % 40)});
  }
  starts.resize(n_starts);
  if (poisson) starts.resize(1);  // the baseline-only problem has one basin

  FitResult best;
  best.loglik = -std::numeric_limits<double>::infinity();
  bool have_best = false;

  for (const Start& s0 : starts) {
    const HawkesSpec prototype = make_start(events, cfg, P, poisson, s0.ratio, s0.beta);
    const ParamLayout layout = layout_of(prototype);
    const std::vector<double> theta0 = pack_params(prototype);

    // Optimizer space: log for positive parameters (rates, alpha, beta),
    // identity for spline coefficients. Poisson pins the kernel entries.
    std::vector<bool> active(layout.total, true);
    std::vector<bool> log_scale(layout.total, true);
    for (int m = 0; m < P; ++m) {
      const int off = layout.offset[m];
      if (prototype.baselines[m].kind() == Baseline::Kind::Spline) {
        for (int i = 0; i < layout.baseline_size[m]; ++i) log_scale[off + i] = false;
      }
      for (int n = 0; n < P; ++n) {
        const int ai = layout.kernel_offset(m) - layout.offset[m] + off + n;
        const int bi = ai + P;
        if (poisson) {
          active[ai] = false;
          active[bi] = false;
        }
      }
    }

    std::vector<int> map;  // optimizer index -> layout index
    for (int i = 0; i < layout.total; ++i)
      if (active[i]) map.push_back(i);
    const std::size_t n_opt = map.size();

    std::vector<double> u0(n_opt), lo(n_opt, -cfg.log_bound), hi(n_opt, cfg.log_bound);
    for (std::size_t i = 0; i < n_opt; ++i) {
      const double nat = theta0[map[i]];
      u0[i] = log_scale[map[i]] ? std::log(std::max(nat, 1e-12)) : nat;
    }

    std::vector<double> theta = theta0;  // pinned entries stay at their start value
    auto objective = [&](const std::vector<double>& u, std::vector<double>& grad) {
      for (std::size_t i = 0; i < n_opt; ++i)
        theta[map[i]] = log_scale[map[i]] ? std::exp(u[i]) : u[i];
      HawkesSpec spec = unpack_params(prototype, theta);
      const LikelihoodDerivatives d = grad_hessian(spec, events, /*want_hessian=*/false);
      const StabilityPenalty pen = stability_penalty(spec.kernel);
      double f = -d.loglik + pen.value;
      if (!std::isfinite(f)) {
        std::fill(grad.begin(), grad.end(), 0.0);
        return std::numeric_limits<double>::infinity();
      }
      std::vector<double> g_nat(layout.total, 0.0);
      for (int i = 0; i < layout.total; ++i) g_nat[i] = -d.gradient[i];
      for (int m = 0; m < P; ++m) {
        for (int n = 0; n < P; ++n) {
          const int ai = layout.kernel_offset(m) + n;
          g_nat[ai] += pen.d_alpha[m][n];
          g_nat[ai + P] += pen.d_beta[m][n];
        }
      }
      for (std::size_t i = 0; i < n_opt; ++i) {
        const int j = map[i];
        grad[i] = log_scale[j] ? g_nat[j] * theta[j] : g_nat[j];
      }
      return f;
    };

    LbfgsOptions opt;
    opt.max_iterations = cfg.max_iterations;
    opt.grad_tol = cfg.grad_tol;
    opt.f_rel_tol = cfg.f_rel_tol;
    const LbfgsResult res = lbfgs_minimize(objective, u0, lo, hi, opt);

    for (std::size_t i = 0; i < n_opt; ++i)
      theta[map[i]] = log_scale[map[i]] ? std::exp(res.x[i]) : res.x[i];
    const HawkesSpec fitted = unpack_params(prototype, theta);
    const double ll = log_likelihood(fitted, events);

    if (!have_best || ll > best.loglik) {
      have_best = true;
      best.spec = fitted;
      best.loglik = ll;
      best.n_params = static_cast<int>(n_opt);
      best.converged = res.converged;
      best.iterations = res.iterations;
      best.gradient_norm = res.grad_norm;
    }
  }

  best.aic = -2.0 * best.loglik + 2.0 * static_cast<double>(best.n_params);
  best.data_id = data_id;
  return best;
}

ModelRanking select_model(const std::vector<FitResult>& fits) {
  if (fits.empty()) throw ConfigError("select_model: no fits given");
  for (const FitResult& f : fits) {
    if (f.data_id != fits[0].data_id)
      throw ConfigError("select_model: fits come from different datasets");
  }
  ModelRanking r;
  r.order.resize(fits.size());
  std::iota(r.order.begin(), r.order.end(), std::size_t{0});
  std::sort(r.order.begin(), r.order.end(), [&](std::size_t a, std::size_t b) {
    if (fits[a].aic != fits[b].aic) return fits[a].aic < fits[b].aic;
    return a < b;
  });
  const std::size_t n = fits.size();
  r.delta_aic.assign(n, std::vector<double>(n, 0.0));
  r.delta_loglik.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      r.delta_aic[i][j] = fits[i].aic - fits[j].aic;
      r.delta_loglik[i][j] = fits[i].loglik - fits[j].loglik;
    }
  }
  return r;
}

}  // namespace oflow
