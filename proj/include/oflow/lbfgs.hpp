#pragma once

// Limited-memory BFGS minimization with box constraints handled by projection:
// search directions from the standard two-loop recursion, iterates clipped to
// the box, Armijo backtracking on the projected path. Small and deterministic;
// adequate for the smooth, low-dimensional problems in this codebase.

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <vector>

namespace oflow {

struct LbfgsOptions {
  int max_iterations = 500;
  double f_rel_tol = 1e-9;   // relative objective change
  double grad_tol = 1e-5;    // projected-gradient infinity norm
  int memory = 8;
  int max_backtracks = 40;
};

struct LbfgsResult {
  std::vector<double> x;
  double f = std::numeric_limits<double>::infinity();
  double grad_norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

// fg(x, grad_out) -> f; minimizes f over the box [lo, hi] starting at x0.
template <typename F>
LbfgsResult lbfgs_minimize(F&& fg, std::vector<double> x0, const std::vector<double>& lo,
                           const std::vector<double>& hi, const LbfgsOptions& opt = {}) {
  const std::size_t n = x0.size();
  auto clip = [&](std::vector<double>& v) {
    for (std::size_t i = 0; i < n; ++i) v[i] = std::min(hi[i], std::max(lo[i], v[i]));
  };
  auto finite = [](double v) { return std::isfinite(v); };

  clip(x0);
  std::vector<double> x = x0, g(n), g_new(n), x_new(n), d(n);
  double f = fg(x, g);
  if (!finite(f)) f = std::numeric_limits<double>::infinity();

  auto projected_grad_norm = [&](const std::vector<double>& xv, const std::vector<double>& gv) {
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double step = std::min(hi[i], std::max(lo[i], xv[i] - gv[i])) - xv[i];
      norm = std::max(norm, std::abs(step));
    }
    return norm;
  };

  struct Pair {
    std::vector<double> s, y;
    double rho;
  };
  std::deque<Pair> history;

  LbfgsResult result;
  result.x = x;
  result.f = f;
  result.grad_norm = projected_grad_norm(x, g);

  for (int iter = 1; iter <= opt.max_iterations; ++iter) {
    result.iterations = iter;
    if (result.grad_norm <= opt.grad_tol) {
      result.converged = true;
      break;
    }

    // Two-loop recursion for d = -H g.
    d = g;
    std::vector<double> alpha_hist(history.size());
    for (std::size_t idx = history.size(); idx-- > 0;) {
      const Pair& p = history[idx];
      double a = 0.0;
      for (std::size_t i = 0; i < n; ++i) a += p.s[i] * d[i];
      a *= p.rho;
      alpha_hist[idx] = a;
      for (std::size_t i = 0; i < n; ++i) d[i] -= a * p.y[i];
    }
    if (!history.empty()) {
      const Pair& last = history.back();
      double yy = 0.0, sy = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        yy += last.y[i] * last.y[i];
        sy += last.s[i] * last.y[i];
      }
      const double scale = sy / std::max(yy, 1e-300);
      for (double& v : d) v *= scale;
    }
    for (std::size_t idx = 0; idx < history.size(); ++idx) {
      const Pair& p = history[idx];
      double b = 0.0;
      for (std::size_t i = 0; i < n; ++i) b += p.y[i] * d[i];
      b *= p.rho;
      for (std::size_t i = 0; i < n; ++i) d[i] += (alpha_hist[idx] - b) * p.s[i];
    }
    for (double& v : d) v = -v;

    double descent = 0.0;
    for (std::size_t i = 0; i < n; ++i) descent += d[i] * g[i];
    if (!(descent < 0.0)) {  // not a descent direction: restart from steepest
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      history.clear();
    }

    // Armijo backtracking along the projected path.
    bool accepted = false;
    double f_new = f;
    double step = 1.0;
    for (int bt = 0; bt < opt.max_backtracks; ++bt, step *= 0.5) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + step * d[i];
      clip(x_new);
      double dir_dot = 0.0;
      bool moved = false;
      for (std::size_t i = 0; i < n; ++i) {
        dir_dot += g[i] * (x_new[i] - x[i]);
        moved = moved || x_new[i] != x[i];
      }
      if (!moved) break;
      f_new = fg(x_new, g_new);
      if (finite(f_new) && f_new <= f + 1e-4 * dir_dot) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;  // stuck (converged flag reflects tolerances below)

    Pair p;
    p.s.resize(n);
    p.y.resize(n);
    double sy = 0.0, ss = 0.0, yy2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      p.s[i] = x_new[i] - x[i];
      p.y[i] = g_new[i] - g[i];
      sy += p.s[i] * p.y[i];
      ss += p.s[i] * p.s[i];
      yy2 += p.y[i] * p.y[i];
    }
    if (sy > 1e-10 * std::sqrt(ss * yy2)) {
      p.rho = 1.0 / sy;
      history.push_back(std::move(p));
      if (static_cast<int>(history.size()) > opt.memory) history.pop_front();
    }

    const double f_change = std::abs(f - f_new);
    x = x_new;
    g = g_new;
    f = f_new;
    result.x = x;
    result.f = f;
    result.grad_norm = projected_grad_norm(x, g);
    if (f_change <= opt.f_rel_tol * (std::abs(f) + 1.0)) {
      result.converged = true;
      break;
    }
  }
  if (result.grad_norm <= opt.grad_tol) result.converged = true;
  return result;
}

}  // namespace oflow
