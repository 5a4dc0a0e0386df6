#pragma once

// Shared vocabulary types and the error taxonomy used across the library.
// All times are seconds relative to a session window start; all rates are 1/s.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace oflow {

enum class Side { Buy, Sell };

inline const char* to_string(Side s) { return s == Side::Buy ? "B" : "S"; }

// Configuration / usage errors (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Input-data errors: malformed rows, empty streams, coverage gaps (CLI exit code 3).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical non-convergence that still allows partial output (CLI exit code 4).
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

// Session window in seconds relative to its own start: [begin, end].
struct TimeWindow {
  double begin = 0.0;
  double end = 0.0;
  double length() const { return end - begin; }
  bool contains(double t) const { return t >= begin && t <= end; }
};

// One side's market-order arrival times on a window, strictly increasing.
struct EventStream {
  Side side = Side::Buy;
  std::vector<double> times;            // seconds relative to window begin
  std::vector<double> sizes;            // MWh per order (parallel to times; may be empty)
  TimeWindow window;
  std::string product_id;
  // Epoch microseconds corresponding to window.begin, kept so streams can be
  // written back to the absolute-timestamp CSV schema.
  double window_begin_epoch_us = 0.0;

  std::size_t size() const { return times.size(); }
  void validate() const;                // throws DataError on invariant violation
};

// Best bid/ask series; timestamps relative to the same window convention.
struct QuoteSeries {
  std::vector<double> timestamps;
  std::vector<double> best_bid;
  std::vector<double> best_ask;
  TimeWindow window;
  std::string product_id;
};

// Traded-volume profile over equal buckets plus VWAP re-scaling factors F_k.
struct VolumeProfile {
  double bucket_width = 0.0;            // seconds
  std::vector<double> volumes;          // MWh per bucket (raw sums)
  std::vector<double> factors;          // F_k, arithmetic mean exactly 1
};

constexpr double kSecondsPerHour = 3600.0;

}  // namespace oflow
