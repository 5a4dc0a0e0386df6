#pragma once

// Ingestion of trade/quote/LOB-snapshot CSV files into the internal types, the
// reverse writer for event streams, and traded-volume profiles.
//
// Timestamps on disk are absolute (ISO-8601 UTC or epoch microseconds, with
// optional fractional digits); internal event times are double seconds
// relative to the session window start. The writer chooses timestamp strings
// whose reload reproduces the in-memory times bit-exactly.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "oflow/common.hpp"

namespace oflow {

// Absolute session window selection for loaders. When begin/end are unset the
// window defaults to the last `default_hours` ending at the latest timestamp
// in the file (rounded up to a whole microsecond).
struct WindowOptions {
  std::optional<double> begin_epoch_us;  // integral microseconds expected
  std::optional<double> end_epoch_us;
  double default_hours = 8.0;
};

struct LoadReport {
  std::size_t rows = 0;
  std::size_t dropped_outside_window = 0;
  std::size_t jittered_ties = 0;
};

// One EventStream per (product_id, side) present in the file, sorted by
// (product_id, side). Rows outside the window are dropped and counted.
// Throws DataError when nothing survives the filter (empty stream set).
std::vector<EventStream> load_trades(const std::string& path, const WindowOptions& window,
                                     LoadReport* report = nullptr);

// One QuoteSeries per product. The latest quote at or before the window start
// is carried in at t = 0 so spread coverage begins at the window start.
// Crossed records (ask < bid) are rejected with a line-numbered error.
std::vector<QuoteSeries> load_quotes(const std::string& path, const WindowOptions& window);

// Raw LOB snapshot levels grouped per (product, side, timestamp).
struct BookLevelRow {
  double offset_ticks = 0.0;  // price offset from the touch, in ticks
  double volume = 0.0;        // standing volume at that offset, MWh
};

struct BookSnapshot {
  double epoch_us = 0.0;
  std::vector<BookLevelRow> levels;  // sorted by offset, may include zero volumes
};

struct SnapshotSeries {
  std::string product_id;
  Side side = Side::Buy;
  std::vector<BookSnapshot> snapshots;  // sorted by time
};

std::vector<SnapshotSeries> load_snapshots(const std::string& path);

// Writes streams to the trades CSV schema (product_id,timestamp,side,size_mwh,
// price_eur). Timestamps are absolute epoch microseconds chosen so that
// reloading with the same window reproduces every time bit-exactly. Events
// with no recorded sizes are written with size_mwh = default_size.
void write_trades(const std::string& path, const std::vector<EventStream>& streams,
                  double default_size = 1.0, double price = 0.0);

// Sums event sizes into equal-width buckets and computes VWAP re-scaling
// factors F_k = v_k / mean(v) after flooring empty buckets at 1e-6 x mean.
// bucket_width must divide the window length; zero total volume is an error.
VolumeProfile build_volume_profile(const EventStream& stream, double bucket_width);

}  // namespace oflow
