#include "oflow/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "oflow/rng.hpp"

namespace oflow {

std::vector<EventStream> simulate_hawkes(const HawkesSpec& spec, const TimeWindow& window,
                                         std::uint64_t seed, ThinningStats* stats) {
  spec.validate();
  if (!spec.kernel.stable())
    throw ConfigError("simulate: kernel is unstable (spectral radius >= 1)");
  if (!(window.end > window.begin)) throw ConfigError("simulate: empty window");

  const int P = spec.kernel.P;
  Rng rng(seed);
  ThinningStats st;

  // Segment edges where the baseline envelope must be refreshed.
  std::vector<double> knots;
  for (const Baseline& b : spec.baselines) {
    const std::vector<double> k = b.knots();
    knots.insert(knots.end(), k.begin(), k.end());
  }
  knots.push_back(window.end);
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

  auto next_knot = [&](double t) {
    auto it = std::upper_bound(knots.begin(), knots.end(), t);
    return it == knots.end() ? window.end : std::min(*it, window.end);
  };

  // Kernel states at the cursor: S[p][m] = sum of exp(-beta_pm (cur - tau))
  // over accepted events tau <= cur of component m.
  double S[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  std::vector<std::vector<double>> times(P);

  double cur = window.begin;
  while (cur < window.end) {
    const double seg_end = next_knot(cur);

    // Dominating rate on (cur, seg_end]: kernel part can only decay, baseline
    // part bounded by its segment maximum.
    double bound = 0.0;
    for (int p = 0; p < P; ++p) {
      double acc = spec.baselines[p].upper_bound(cur, seg_end);
      for (int m = 0; m < P; ++m) acc += spec.kernel.alpha[p][m] * S[p][m];
      bound += acc;
    }
    if (!(bound > 0.0)) {  // dead model on this segment: jump to the next knot
      if (seg_end >= window.end) break;
      cur = seg_end;
      continue;
    }

    const double gap = rng.exponential(bound);
    double candidate = cur + gap;
    if (candidate > seg_end) {
      // No proposal inside this segment: decay states to the knot and refresh.
      const double dt = seg_end - cur;
      for (int p = 0; p < P; ++p)
        for (int m = 0; m < P; ++m) S[p][m] *= std::exp(-spec.kernel.beta[p][m] * dt);
      cur = seg_end;
      if (cur >= window.end) break;
      continue;
    }

    // Evaluate the true intensity at the candidate (left limit).
    const double dt = candidate - cur;
    for (int p = 0; p < P; ++p)
      for (int m = 0; m < P; ++m) S[p][m] *= std::exp(-spec.kernel.beta[p][m] * dt);
    double lambda[2] = {0.0, 0.0};
    double total = 0.0;
    for (int p = 0; p < P; ++p) {
      double acc = spec.baselines[p].value(candidate);
      for (int m = 0; m < P; ++m) acc += spec.kernel.alpha[p][m] * S[p][m];
      lambda[p] = acc;
      total += acc;
    }

    ++st.proposals;
    st.max_intensity_to_bound = std::max(st.max_intensity_to_bound, total / bound);
    if (total > bound * (1.0 + 1e-9)) {
      throw std::logic_error("simulate: thinning bound exceeded by true intensity");
    }

    cur = candidate;
    if (rng.uniform01() * bound < total) {
      // Accept; pick the component proportionally to its intensity share.
      double u = rng.uniform01() * total;
      int comp = 0;
      for (int p = 0; p < P; ++p) {
        if (u < lambda[p] || p == P - 1) {
          comp = p;
          break;
        }
        u -= lambda[p];
      }
      ++st.accepted;
      times[comp].push_back(candidate);
      for (int p = 0; p < P; ++p) S[p][comp] += 1.0;
    }
  }

  std::vector<EventStream> out(P);
  for (int p = 0; p < P; ++p) {
    EventStream& s = out[p];
    s.side = p == 0 ? Side::Buy : Side::Sell;
    s.product_id = "SIM";
    s.window = {0.0, window.length()};
    s.window_begin_epoch_us = 0.0;
    s.times.reserve(times[p].size());
    for (double t : times[p]) s.times.push_back(t - window.begin);
    s.sizes.assign(s.times.size(), spec.m1);
    s.validate();
  }
  if (stats) *stats = st;
  return out;
}

double PricePath::value_at(double t) const {
  double v = s0;
  for (std::size_t i = 0; i < jump_times.size() && jump_times[i] <= t; ++i)
    v += mark_size * jump_signs[i];
  return v;
}

PricePath price_path_from_events(const EventStream& buys, const EventStream& sells,
                                 double s0, double mark) {
  if (buys.window.length() != sells.window.length())
    throw ConfigError("price path: streams must share a window");
  PricePath path;
  path.s0 = s0;
  path.mark_size = mark;
  path.window = buys.window;

  struct Tagged {
    double t;
    int sign;
    std::size_t order;
  };
  std::vector<Tagged> all;
  all.reserve(buys.times.size() + sells.times.size());
  for (std::size_t i = 0; i < buys.times.size(); ++i)
    all.push_back({buys.times[i], +1, i});
  for (std::size_t i = 0; i < sells.times.size(); ++i)
    all.push_back({sells.times[i], -1, i});
  std::sort(all.begin(), all.end(), [](const Tagged& a, const Tagged& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.sign != b.sign) return a.sign > b.sign;  // buys first on exact ties
    return a.order < b.order;
  });

  for (const Tagged& ev : all) {
    double t = ev.t;
    if (!path.jump_times.empty() && t <= path.jump_times.back())
      t = path.jump_times.back() + 1e-6;  // cascading microsecond jitter
    path.jump_times.push_back(t);
    path.jump_signs.push_back(ev.sign);
  }
  return path;
}

}  // namespace oflow
