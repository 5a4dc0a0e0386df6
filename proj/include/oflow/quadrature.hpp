#pragma once

// Gauss-Legendre quadrature (order 16) with adaptive bisection to an absolute
// tolerance, plus a helper that pre-splits the integration range at a sorted
// list of breakpoints (used for spline-baseline integrals whose integrands are
// only piecewise-smooth at bump-support boundaries).

#include <algorithm>
#include <cmath>
#include <vector>

namespace oflow {

namespace detail {
// Nodes/weights for 16-point Gauss-Legendre on [-1, 1] (positive half; rule is
// symmetric).
constexpr int kGlPoints = 8;
constexpr double kGlNode[kGlPoints] = {
    0.0950125098376374, 0.2816035507792589, 0.4580167776572274, 0.6178762444026438,
    0.7554044083550030, 0.8656312023878318, 0.9445750230732326, 0.9894009349916499};
constexpr double kGlWeight[kGlPoints] = {
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};
}  // namespace detail

template <typename F>
double gauss_legendre_16(F&& f, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double sum = 0.0;
  for (int i = 0; i < detail::kGlPoints; ++i) {
    const double dx = half * detail::kGlNode[i];
    sum += detail::kGlWeight[i] * (f(mid - dx) + f(mid + dx));
  }
  return sum * half;
}

// Adaptive bisection on [a, b]: accept a panel when GL16 agrees with its two
// half-panel refinement within the panel's share of the absolute tolerance,
// or within a near-machine relative tolerance of the refined value. The
// relative escape keeps large-magnitude integrands (e.g. exp-spline baselines
// with big coefficients mid-optimization) from recursing to full depth
// chasing an absolute target below floating-point resolution.
template <typename F>
double integrate_adaptive(F&& f, double a, double b, double abs_tol = 1e-10,
                          int max_depth = 30) {
  struct Panel {
    double a, b, coarse;
    int depth;
  };
  if (!(b > a)) return 0.0;
  double total = 0.0;
  std::vector<Panel> stack{{a, b, gauss_legendre_16(f, a, b), 0}};
  while (!stack.empty()) {
    Panel p = stack.back();
    stack.pop_back();
    const double mid = 0.5 * (p.a + p.b);
    const double left = gauss_legendre_16(f, p.a, mid);
    const double right = gauss_legendre_16(f, mid, p.b);
    const double refined = left + right;
    const double panel_tol =
        std::max(abs_tol * (p.b - p.a) / (b - a), 1e-13 * std::abs(refined));
    if (std::abs(refined - p.coarse) <= panel_tol || p.depth >= max_depth) {
      total += refined;
    } else {
      stack.push_back({p.a, mid, left, p.depth + 1});
      stack.push_back({mid, p.b, right, p.depth + 1});
    }
  }
  return total;
}

// Integrate over [a, b] split at every interior breakpoint (sorted ascending).
template <typename F>
double integrate_with_breakpoints(F&& f, double a, double b,
                                  const std::vector<double>& breakpoints,
                                  double abs_tol = 1e-10) {
  if (!(b > a)) return 0.0;
  double total = 0.0;
  double lo = a;
  auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), a);
  for (; it != breakpoints.end() && *it < b; ++it) {
    if (*it > lo) {
      total += integrate_adaptive(f, lo, *it, abs_tol);
      lo = *it;
    }
  }
  total += integrate_adaptive(f, lo, b, abs_tol);
  return total;
}

}  // namespace oflow
