#include "oflow/baseline.hpp"

#include <algorithm>
#include <cmath>

#include "oflow/quadrature.hpp"

namespace oflow {

namespace {
constexpr double kPi = 3.14159265358979323846;

double bump(double x) {
  if (std::abs(x) > 2.0) return 0.0;
  return (std::cos(kPi * x / 2.0) + 1.0) / 4.0;
}
}  // namespace

void SplineBaseline::validate() const {
  if (n_basis < 4) throw ConfigError("spline baseline requires n_basis >= 4");
  if (static_cast<int>(coeffs.size()) != n_basis)
    throw ConfigError("spline baseline: coefficient count must equal n_basis");
  if (!(window.end > window.begin)) throw ConfigError("spline baseline: empty window");
}

double cosine_basis(int i, double t, const SplineBaseline& spline) {
  const double w = spline.width();
  const double x = (t - spline.window.begin - (i - 2) * w) / w;
  return bump(x);
}

Baseline Baseline::constant(double rate) {
  if (!(rate > 0.0)) throw ConfigError("constant baseline rate must be positive");
  Baseline b;
  b.kind_ = Kind::Constant;
  b.rate_ = rate;
  return b;
}

Baseline Baseline::piecewise(std::vector<double> breakpoints, std::vector<double> rates) {
  if (breakpoints.size() < 2 || rates.size() + 1 != breakpoints.size())
    throw ConfigError("piecewise baseline: need K+1 breakpoints for K rates");
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    if (!(breakpoints[i] > breakpoints[i - 1]))
      throw ConfigError("piecewise baseline: breakpoints must be strictly increasing");
  }
  for (double r : rates) {
    if (!(r > 0.0)) throw ConfigError("piecewise baseline: rates must be positive");
  }
  Baseline b;
  b.kind_ = Kind::Piecewise;
  b.breakpoints_ = std::move(breakpoints);
  b.rates_ = std::move(rates);
  return b;
}

Baseline Baseline::spline(SplineBaseline s) {
  s.validate();
  Baseline b;
  b.kind_ = Kind::Spline;
  b.spline_ = std::move(s);
  return b;
}

double Baseline::value(double t) const {
  switch (kind_) {
    case Kind::Constant:
      return rate_;
    case Kind::Piecewise: {
      // Segment j covers [b_j, b_{j+1}); the last segment includes its end.
      auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
      std::size_t j = static_cast<std::size_t>(it - breakpoints_.begin());
      if (j == 0) return rates_.front();
      if (j >= breakpoints_.size()) return rates_.back();
      return rates_[j - 1];
    }
    case Kind::Spline: {
      double g = 0.0;
      for (const auto& [i, f] : basis_values(t)) g += spline_.coeffs[i - 1] * f;
      return std::exp(g);
    }
  }
  return 0.0;
}

std::vector<std::pair<int, double>> Baseline::basis_values(double t) const {
  std::vector<std::pair<int, double>> out;
  if (kind_ != Kind::Spline) return out;
  const double w = spline_.width();
  const double u = (t - spline_.window.begin) / w;
  // f_i is supported where u - (i - 2) is in [-2, 2], i.e. i in [u, u + 4].
  const int lo = std::max(1, static_cast<int>(std::ceil(u - 1e-12)));
  const int hi = std::min(spline_.n_basis, static_cast<int>(std::floor(u + 4.0 + 1e-12)));
  for (int i = lo; i <= hi; ++i) {
    const double f = bump(u - (i - 2));
    if (f != 0.0) out.emplace_back(i, f);
  }
  return out;
}

double Baseline::integral(double a, double b) const {
  if (!(b > a)) return 0.0;
  switch (kind_) {
    case Kind::Constant:
      return rate_ * (b - a);
    case Kind::Piecewise: {
      double total = 0.0;
      for (std::size_t j = 0; j + 1 < breakpoints_.size(); ++j) {
        const double lo = std::max(a, breakpoints_[j]);
        const double hi = std::min(b, breakpoints_[j + 1]);
        if (hi > lo) total += rates_[j] * (hi - lo);
      }
      // Portions outside the breakpoint span extend the edge rates.
      if (a < breakpoints_.front())
        total += rates_.front() * (std::min(b, breakpoints_.front()) - a);
      if (b > breakpoints_.back())
        total += rates_.back() * (b - std::max(a, breakpoints_.back()));
      return total;
    }
    case Kind::Spline:
      return integrate_with_breakpoints([this](double t) { return value(t); }, a, b,
                                        knots());
  }
  return 0.0;
}

std::vector<double> Baseline::knots() const {
  switch (kind_) {
    case Kind::Constant:
      return {};
    case Kind::Piecewise:
      return breakpoints_;
    case Kind::Spline: {
      std::vector<double> out;
      const double w = spline_.width();
      for (int k = 0; k <= spline_.n_basis - 3; ++k)
        out.push_back(spline_.window.begin + k * w);
      return out;
    }
  }
  return {};
}

double Baseline::upper_bound(double a, double b) const {
  switch (kind_) {
    case Kind::Constant:
      return rate_;
    case Kind::Piecewise: {
      double m = 0.0;
      for (std::size_t j = 0; j + 1 < breakpoints_.size(); ++j) {
        if (breakpoints_[j] < b && breakpoints_[j + 1] > a) m = std::max(m, rates_[j]);
      }
      if (a < breakpoints_.front()) m = std::max(m, rates_.front());
      if (b > breakpoints_.back()) m = std::max(m, rates_.back());
      return m;
    }
    case Kind::Spline: {
      // Inside the window the active bumps form a convex combination
      // (non-negative weights summing to exactly 1), so the log-baseline is
      // bounded by the largest active coefficient.
      const double w = spline_.width();
      const double ua = (a - spline_.window.begin) / w;
      const double ub = (b - spline_.window.begin) / w;
      const int lo = std::max(1, static_cast<int>(std::ceil(ua - 1e-12)));
      const int hi = std::min(spline_.n_basis, static_cast<int>(std::floor(ub + 4.0 + 1e-12)));
      double max_xi = 0.0;  // weight can vanish at the window edges
      for (int i = lo; i <= hi; ++i) max_xi = std::max(max_xi, spline_.coeffs[i - 1]);
      return std::exp(max_xi);
    }
  }
  return 0.0;
}

double Baseline::average(const TimeWindow& window) const {
  return integral(window.begin, window.end) / window.length();
}

}  // namespace oflow
