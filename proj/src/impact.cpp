#include "oflow/impact.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

#include "oflow/stats.hpp"

namespace oflow {

void BookLadder::validate() const {
  if (offsets.empty() || offsets.size() != volumes.size() || offsets.size() != cum.size()) {
    throw DataError("BookLadder: empty or inconsistent level arrays");
  }
  if (offsets.front() != 0.0) throw DataError("BookLadder: first offset must be 0");
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    if (!(volumes[i] > 0.0)) throw DataError("BookLadder: volumes must be positive");
    if (i > 0 && !(offsets[i] > offsets[i - 1])) {
      throw DataError("BookLadder: offsets must be strictly increasing");
    }
    const double expect = (i == 0 ? volumes[0] : cum[i - 1] + volumes[i]);
    if (std::abs(cum[i] - expect) > 1e-9 * std::max(1.0, expect)) {
      throw DataError("BookLadder: cumulative volumes inconsistent");
    }
  }
}

BookLadder build_ladder(const std::vector<BookLevelRow>& levels) {
  BookLadder ladder;
  double base_offset = 0.0;
  bool have_base = false;
  double running = 0.0;
  for (const auto& lvl : levels) {
    if (!(lvl.volume > 0.0)) continue;  // skip empty levels
    if (!have_base) {
      // Offsets are measured from the first standing liquidity, so the
      // shallowest non-empty level defines offset zero.
      base_offset = lvl.offset_ticks;
      have_base = true;
    }
    const double off = lvl.offset_ticks - base_offset;
    if (!ladder.offsets.empty() && off <= ladder.offsets.back()) {
      throw DataError("build_ladder: snapshot levels not strictly increasing in offset");
    }
    running += lvl.volume;
    ladder.offsets.push_back(off);
    ladder.volumes.push_back(lvl.volume);
    ladder.cum.push_back(running);
  }
  if (!have_base) throw DataError("build_ladder: all levels empty");
  return ladder;
}

BookLadder build_ladder(const BookSnapshot& snapshot) { return build_ladder(snapshot.levels); }

double walk_book_cost(const BookLadder& ladder, double size, double exhaustion_penalty_ticks) {
  ladder.validate();
  if (!(size > 0.0)) throw ConfigError("walk_book_cost: order size must be positive");
  double remaining = size;
  double total = 0.0;
  for (std::size_t i = 0; i < ladder.depth() && remaining > 0.0; ++i) {
    const double take = std::min(remaining, ladder.volumes[i]);
    total += take * ladder.offsets[i];
    remaining -= take;
  }
  if (remaining > 0.0) {
    total += remaining * (ladder.offsets.back() + exhaustion_penalty_ticks);
  }
  return total / size;
}

ApproxCostResult approx_cost(const std::vector<BookLadder>& snapshots, double size,
                             double exhaustion_penalty_ticks) {
  if (snapshots.size() < 30) {
    throw DataError("approx_cost: need at least 30 snapshot samples, got " +
                    std::to_string(snapshots.size()));
  }
  if (!(size > 0.0)) throw ConfigError("approx_cost: order size must be positive");
  const std::size_t n = snapshots.size();
  const double dn = static_cast<double>(n);

  std::size_t max_depth = 0;
  for (const auto& s : snapshots) {
    s.validate();
    max_depth = std::max(max_depth, s.depth());
  }

  // Deterministic offset grid: mean offset per level over the snapshots deep
  // enough to have it. Cumulative volumes are padded flat beyond a
  // snapshot's own depth (an exhausted book adds no liquidity).
  std::vector<double> mean_off(max_depth, 0.0);
  std::vector<std::size_t> off_count(max_depth, 0);
  for (const auto& s : snapshots) {
    for (std::size_t j = 0; j < s.depth(); ++j) {
      mean_off[j] += s.offsets[j];
      ++off_count[j];
    }
  }
  for (std::size_t j = 0; j < max_depth; ++j) mean_off[j] /= static_cast<double>(off_count[j]);

  auto padded_cum = [&](const BookLadder& s, std::size_t j) {
    return s.cum[std::min(j, s.depth() - 1)];
  };
  auto sd_of_level = [&](std::size_t j) {
    double mean = 0.0;
    for (const auto& s : snapshots) mean += padded_cum(s, j);
    mean /= dn;
    double var = 0.0;
    for (const auto& s : snapshots) {
      const double d = padded_cum(s, j) - mean;
      var += d * d;
    }
    return std::sqrt(var / dn);
  };
  const double bw_scale = std::pow(dn, -1.0 / 6.0);  // per-dimension Silverman rule

  ApproxCostResult result;
  double total = 0.0;
  // Bracket events {m_j < U <= m_{j+1}} for consecutive level pairs, plus the
  // exhaustion bracket {m_last < U}. The sub-best bracket {U <= m_0} executes
  // entirely at offset zero, hence contributes no cost.
  for (std::size_t j = 0; j < max_depth; ++j) {
    const bool exhaustion = (j + 1 == max_depth);
    const double price_bulk = mean_off[j];
    const double price_marginal =
        exhaustion ? mean_off[j] + exhaustion_penalty_ticks : mean_off[j + 1];

    const double sx = sd_of_level(j);
    const double sy = exhaustion ? 1.0 : sd_of_level(j + 1);
    double prob = 0.0;
    double bulk_mean = 0.0;  // E[m_j * indicator]
    if (sx > 0.0 && sy > 0.0) {
      const double hx = std::max(sx * bw_scale, 1e-6 * sx);
      const double hy = exhaustion ? 1.0 : std::max(sy * bw_scale, 1e-6 * sy);
      for (const auto& s : snapshots) {
        const double x = padded_cum(s, j);
        const double z = (size - x) / hx;
        const double upper =
            exhaustion ? 1.0 : normal_sf((size - padded_cum(s, j + 1)) / hy);
        const double cdf = normal_cdf(z);
        prob += cdf * upper;
        bulk_mean += (x * cdf - hx * normal_pdf(z)) * upper;
      }
    } else {
      // Degenerate spread in one of the pair's dimensions: fall back to
      // empirical indicator frequencies for this bracket.
      result.kde_degenerate = true;
      for (const auto& s : snapshots) {
        const double x = padded_cum(s, j);
        const bool in_bracket =
            x < size && (exhaustion || size <= padded_cum(s, j + 1));
        if (in_bracket) {
          prob += 1.0;
          bulk_mean += x;
        }
      }
    }
    prob /= dn;
    bulk_mean /= dn;
    const double marginal_mean = std::max(size * prob - bulk_mean, 0.0);
    total += price_bulk * bulk_mean + price_marginal * marginal_mean;
  }
  result.cost = total / size;
  return result;
}

EtaFit fit_eta(const std::vector<double>& sizes, const std::vector<double>& costs) {
  if (sizes.size() != costs.size()) {
    throw ConfigError("fit_eta: sizes and costs must have equal length");
  }
  if (sizes.size() < 2) throw DataError("fit_eta: need at least two observations");
  std::vector<double> distinct = sizes;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2) {
    throw DataError("fit_eta: need at least two distinct sizes (singular design)");
  }

  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    sxx += sizes[i] * sizes[i];
    sxy += sizes[i] * costs[i];
  }
  EtaFit fit;
  fit.eta = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const double r = costs[i] - fit.eta * sizes[i];
    rss += r * r;
  }
  fit.sigma = std::sqrt(rss / static_cast<double>(sizes.size() - 1));
  fit.se = fit.sigma / std::sqrt(sxx);
  return fit;
}

double time_weighted_bas(const QuoteSeries& quotes, const TimeWindow& interval) {
  if (!(interval.end > interval.begin)) {
    throw ConfigError("time_weighted_bas: interval must have positive length");
  }
  const auto& ts = quotes.timestamps;
  if (ts.empty()) throw DataError("time_weighted_bas: empty quote series");
  // Last quote at or before the interval start; quotes are right-open.
  auto it = std::upper_bound(ts.begin(), ts.end(), interval.begin);
  if (it == ts.begin()) {
    throw DataError("time_weighted_bas: no quote at or before the interval start");
  }
  std::size_t cur = static_cast<std::size_t>(it - ts.begin()) - 1;

  double acc = 0.0;
  double t = interval.begin;
  while (t < interval.end) {
    const double next_change =
        (cur + 1 < ts.size()) ? ts[cur + 1] : std::numeric_limits<double>::infinity();
    const double seg_end = std::min(interval.end, next_change);
    acc += (seg_end - t) * (quotes.best_ask[cur] - quotes.best_bid[cur]);
    t = seg_end;
    if (seg_end == next_change) ++cur;
  }
  return acc / interval.length();
}

std::vector<double> bas_curve(const QuoteSeries& quotes, const TimeWindow& window, double dt) {
  if (!(dt > 0.0)) throw ConfigError("bas_curve: dt must be positive");
  const double len = window.length();
  const auto nb = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len / dt - 1e-9)));
  std::vector<double> out;
  out.reserve(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    const double a = window.begin + static_cast<double>(k) * dt;
    const double b = std::min(window.end, a + dt);
    out.push_back(time_weighted_bas(quotes, TimeWindow{a, b}));
  }
  return out;
}

double resilience_from_kernel(double alpha, double beta, double session_length) {
  if (!(beta > 0.0) || alpha < 0.0) {
    throw ConfigError("resilience_from_kernel: need beta > 0 and alpha >= 0");
  }
  if (!(alpha / beta < 1.0)) {
    throw ConfigError("resilience_from_kernel: branching ratio must be below 1");
  }
  if (!(session_length > 0.0)) {
    throw ConfigError("resilience_from_kernel: session length must be positive");
  }
  return (1.0 - alpha / beta) / (session_length / 2.0);
}

double ImpactParams::propagator(double u) const {
  return (1.0 - mu) * std::exp(-rho * u) + mu;
}

void ImpactParams::validate() const {
  if (!(mu >= 0.0 && mu <= 1.0)) throw ConfigError("ImpactParams: mu must lie in [0,1]");
  if (!(rho > 0.0)) throw ConfigError("ImpactParams: rho must be positive");
  if (!(eta >= 0.0)) throw ConfigError("ImpactParams: eta must be non-negative");
  if (!(m1 > 0.0)) throw ConfigError("ImpactParams: m1 must be positive");
  if (std::abs(epsilon - mu) > 1e-12) {
    throw ConfigError("ImpactParams: the trader's permanent fraction must equal mu");
  }
}

ImpactParams make_impact_params(double mu, double rho, double eta, double m1) {
  ImpactParams p;
  p.mu = mu;
  p.rho = rho;
  p.eta = eta;
  p.m1 = m1;
  p.epsilon = mu;
  p.validate();
  return p;
}

}  // namespace oflow
