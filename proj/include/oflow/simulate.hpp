#pragma once

// Exact simulation of the Hawkes model by Ogata thinning, and tick price paths
// built from signed event streams.

#include <cstdint>
#include <vector>

#include "oflow/hawkes.hpp"

namespace oflow {

struct ThinningStats {
  std::size_t proposals = 0;
  std::size_t accepted = 0;
  // Largest ratio of true total intensity to the dominating bound seen at a
  // proposal; must never exceed 1.
  double max_intensity_to_bound = 0.0;

  double acceptance_rate() const {
    return proposals == 0 ? 0.0 : static_cast<double>(accepted) / proposals;
  }
};

// Simulate the model over `window` (times relative to window.begin). Returns
// one stream per component (component 0 = Buy, 1 = Sell), sizes filled with
// spec.m1. The dominating rate is the kernel state at the current left limit
// plus the baseline's segment maximum, refreshed after every proposal.
// Throws ConfigError when the kernel is unstable.
std::vector<EventStream> simulate_hawkes(const HawkesSpec& spec, const TimeWindow& window,
                                         std::uint64_t seed,
                                         ThinningStats* stats = nullptr);

struct PricePath {
  double s0 = 0.0;
  std::vector<double> jump_times;  // strictly increasing
  std::vector<int> jump_signs;     // +1 buy, -1 sell
  double mark_size = 1.0;          // price move per jump (one tick by default)
  TimeWindow window;

  double value_at(double t) const;  // s0 + mark * net jump count up to and incl. t
};

// Merge buy (+1) and sell (-1) streams into a signed path; cross-stream ties
// are broken with the same +1 microsecond cascading jitter as ingestion.
PricePath price_path_from_events(const EventStream& buys, const EventStream& sells,
                                 double s0, double mark);

}  // namespace oflow
