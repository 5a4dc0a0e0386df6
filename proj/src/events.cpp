#include "oflow/events.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <limits>
#include <map>

#include "oflow/csv.hpp"

namespace oflow {

void EventStream::validate() const {
  if (!(window.end > window.begin)) {
    throw DataError("EventStream: window must have positive length");
  }
  if (!sizes.empty() && sizes.size() != times.size()) {
    throw DataError("EventStream: sizes must be empty or parallel to times");
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < window.begin || times[i] > window.end) {
      throw DataError("EventStream: event time outside the window");
    }
    if (i > 0 && !(times[i] > times[i - 1])) {
      throw DataError("EventStream: event times must be strictly increasing");
    }
    if (!sizes.empty() && !(sizes[i] > 0.0)) {
      throw DataError("EventStream: order sizes must be positive");
    }
  }
}

namespace {

// An absolute timestamp split into whole microseconds plus a fractional
// microsecond remainder in [0, 1). Keeping the integer part exact (int64) is
// what makes bit-exact write/reload round trips possible: double cannot hold
// modern epoch-microsecond values at sub-microsecond resolution.
struct ParsedTime {
  long long int_us = 0;
  double frac_us = 0.0;
};

bool is_digits(const std::string& s, std::size_t from, std::size_t to) {
  if (from >= to || to > s.size()) return false;
  for (std::size_t i = from; i < to; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
  }
  return true;
}

[[noreturn]] void bad_time(const std::string& field, const std::string& path,
                           std::size_t line) {
  throw DataError(path + ":" + std::to_string(line) +
                  ": cannot parse timestamp '" + field + "'");
}

ParsedTime parse_iso8601(const std::string& s, const std::string& path, std::size_t line) {
  // YYYY-MM-DD[T ]HH:MM:SS[.fraction][Z], interpreted as UTC.
  if (s.size() < 19 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') ||
      s[13] != ':' || s[16] != ':' || !is_digits(s, 0, 4) || !is_digits(s, 5, 7) ||
      !is_digits(s, 8, 10) || !is_digits(s, 11, 13) || !is_digits(s, 14, 16) ||
      !is_digits(s, 17, 19)) {
    bad_time(s, path, line);
  }
  std::tm tm{};
  tm.tm_year = std::atoi(s.substr(0, 4).c_str()) - 1900;
  tm.tm_mon = std::atoi(s.substr(5, 2).c_str()) - 1;
  tm.tm_mday = std::atoi(s.substr(8, 2).c_str());
  tm.tm_hour = std::atoi(s.substr(11, 2).c_str());
  tm.tm_min = std::atoi(s.substr(14, 2).c_str());
  tm.tm_sec = std::atoi(s.substr(17, 2).c_str());
  const long long secs = static_cast<long long>(timegm(&tm));

  std::string digits;
  std::size_t pos = 19;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    const std::size_t start = pos;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
    digits = s.substr(start, pos - start);
    if (digits.empty()) bad_time(s, path, line);
  }
  if (pos < s.size()) {
    if (s[pos] != 'Z' || pos + 1 != s.size()) bad_time(s, path, line);
  }

  ParsedTime pt;
  pt.int_us = secs * 1000000LL;
  // First six fractional-second digits are whole microseconds; the remainder
  // (if any) is a fractional microsecond.
  std::string micro = digits.substr(0, std::min<std::size_t>(6, digits.size()));
  while (micro.size() < 6) micro.push_back('0');
  pt.int_us += std::atoll(micro.c_str());
  if (digits.size() > 6) pt.frac_us = std::strtod(("0." + digits.substr(6)).c_str(), nullptr);
  return pt;
}

ParsedTime parse_timestamp(const std::string& field, const std::string& path,
                           std::size_t line) {
  if (field.empty()) bad_time(field, path, line);
  if (field.find('T') != std::string::npos || field.find(':') != std::string::npos ||
      field.find('-') != std::string::npos) {
    return parse_iso8601(field, path, line);
  }
  // Numeric epoch microseconds with optional fractional digits.
  const std::size_t dot = field.find('.');
  const std::string int_part = field.substr(0, dot);
  if (!is_digits(int_part, 0, int_part.size())) bad_time(field, path, line);
  ParsedTime pt;
  pt.int_us = std::atoll(int_part.c_str());
  if (dot != std::string::npos) {
    const std::string frac = field.substr(dot + 1);
    if (!is_digits(frac, 0, frac.size())) bad_time(field, path, line);
    pt.frac_us = std::strtod(("0." + frac).c_str(), nullptr);
  }
  return pt;
}

// The loader's canonical time arithmetic. The integer difference is exact and
// small enough to divide cleanly; the fractional microsecond contributes its
// own rounded term. write_trades relies on reproducing exactly this.
double to_relative_seconds(const ParsedTime& pt, long long begin_us) {
  const double whole = static_cast<double>(pt.int_us - begin_us) / 1e6;
  const double frac = pt.frac_us / 1e6;
  return whole + frac;
}

long long integral_epoch_us(double v, const char* what) {
  const double r = std::round(v);
  if (!(std::abs(v - r) < 0.5) || std::abs(v) > 9.0e15) {
    throw ConfigError(std::string(what) + ": window bound must be integral epoch microseconds");
  }
  return static_cast<long long>(r);
}

struct ResolvedWindow {
  long long begin_us = 0;
  long long end_us = 0;
  double length_s() const { return static_cast<double>(end_us - begin_us) / 1e6; }
};

// Resolve the absolute window; `latest` is the ceiling (whole microseconds) of
// the newest timestamp in the file, used when no explicit end is configured.
ResolvedWindow resolve_window(const WindowOptions& opt, long long latest_ceil_us) {
  ResolvedWindow w;
  const long long span_us = std::llround(opt.default_hours * 3600.0 * 1e6);
  if (opt.begin_epoch_us && opt.end_epoch_us) {
    w.begin_us = integral_epoch_us(*opt.begin_epoch_us, "begin");
    w.end_us = integral_epoch_us(*opt.end_epoch_us, "end");
  } else if (opt.end_epoch_us) {
    w.end_us = integral_epoch_us(*opt.end_epoch_us, "end");
    w.begin_us = w.end_us - span_us;
  } else if (opt.begin_epoch_us) {
    w.begin_us = integral_epoch_us(*opt.begin_epoch_us, "begin");
    w.end_us = w.begin_us + span_us;
  } else {
    w.end_us = latest_ceil_us;
    w.begin_us = w.end_us - span_us;
  }
  if (w.end_us <= w.begin_us) throw ConfigError("window end must exceed window begin");
  return w;
}

long long ceil_us(const ParsedTime& pt) {
  return pt.int_us + (pt.frac_us > 0.0 ? 1 : 0);
}

Side parse_side(const std::string& s, const std::string& path, std::size_t line) {
  if (s == "B") return Side::Buy;
  if (s == "S") return Side::Sell;
  throw DataError(path + ":" + std::to_string(line) + ": side must be 'B' or 'S', got '" +
                  s + "'");
}

// Encode a relative event time as an absolute decimal timestamp whose reload
// through parse_timestamp/to_relative_seconds reproduces `t` bit-exactly. The
// candidate is verified through the real loader arithmetic and nudged if the
// first choice rounds differently.
std::string encode_time(double t, long long begin_us) {
  auto whole_part = [&](long long d) { return static_cast<double>(d) / 1e6; };
  long long d_int = static_cast<long long>(std::floor(t * 1e6));
  while (whole_part(d_int) > t) --d_int;
  while (d_int + 1 <= static_cast<long long>(9e15) && whole_part(d_int + 1) <= t) ++d_int;

  auto try_field = [&](const std::string& field) -> bool {
    const ParsedTime pt = parse_timestamp(field, "", 0);
    return to_relative_seconds(pt, begin_us) == t;
  };

  for (long long base : {d_int, d_int - 1, d_int + 1}) {
    if (base < 0) continue;
    const double a = whole_part(base);
    const double r = t - a;
    if (r < 0.0) continue;
    double g = r * 1e6;
    if (g >= 1.0) g = std::nextafter(1.0, 0.0);
    const std::string int_str = std::to_string(begin_us + base);
    if (g == 0.0 && try_field(int_str)) return int_str;

    double cand = g;
    for (int step = 0; step <= 8; ++step) {
      for (double gg : {cand, std::nextafter(cand, 2.0), std::nextafter(cand, -1.0)}) {
        if (gg < 0.0 || gg >= 1.0) continue;
        for (int prec : {17, 25, 35}) {
          char buf[64];
          std::snprintf(buf, sizeof(buf), "%.*f", prec, gg);
          std::string digits(buf + 2);  // strip the "0." prefix
          // Prefer the trailing-zero-stripped form when it reloads identically.
          std::string trimmed = digits;
          while (!trimmed.empty() && trimmed.back() == '0') trimmed.pop_back();
          if (!trimmed.empty() && try_field(int_str + "." + trimmed))
            return int_str + "." + trimmed;
          if (try_field(int_str + "." + digits)) return int_str + "." + digits;
        }
      }
      cand = std::nextafter(cand, 2.0);
    }
  }
  throw DataError("write_trades: cannot encode event time losslessly");
}

}  // namespace

std::vector<EventStream> load_trades(const std::string& path, const WindowOptions& window,
                                     LoadReport* report) {
  csv::Reader reader(path);
  const int c_product = reader.require_column("product_id");
  const int c_time = reader.require_column("timestamp");
  const int c_side = reader.require_column("side");
  const int c_size = reader.require_column("size_mwh");

  struct Row {
    std::string product;
    ParsedTime time;
    Side side;
    double size;
    std::size_t order;
  };
  std::vector<Row> rows;
  std::vector<std::string> fields;
  long long latest_ceil = std::numeric_limits<long long>::min();
  while (reader.next(fields)) {
    Row r;
    r.product = fields[c_product];
    r.time = parse_timestamp(fields[c_time], path, reader.line_number());
    r.side = parse_side(fields[c_side], path, reader.line_number());
    r.size = csv::parse_double(fields[c_size], path, reader.line_number(), "size_mwh");
    r.order = rows.size();
    latest_ceil = std::max(latest_ceil, ceil_us(r.time));
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw DataError("EmptyStream: no trade rows in " + path);

  const ResolvedWindow w = resolve_window(window, latest_ceil);
  const double length = w.length_s();

  LoadReport rep;
  rep.rows = rows.size();

  std::map<std::pair<std::string, int>, std::vector<const Row*>> groups;
  for (const Row& r : rows) {
    const double t = to_relative_seconds(r.time, w.begin_us);
    if (t < 0.0 || t > length) {
      ++rep.dropped_outside_window;
      continue;
    }
    groups[{r.product, r.side == Side::Buy ? 0 : 1}].push_back(&r);
  }

  std::vector<EventStream> streams;
  for (auto& [key, members] : groups) {
    std::sort(members.begin(), members.end(), [&](const Row* a, const Row* b) {
      const double ta = to_relative_seconds(a->time, w.begin_us);
      const double tb = to_relative_seconds(b->time, w.begin_us);
      if (ta != tb) return ta < tb;
      return a->order < b->order;
    });
    EventStream s;
    s.product_id = key.first;
    s.side = key.second == 0 ? Side::Buy : Side::Sell;
    s.window = {0.0, length};
    s.window_begin_epoch_us = static_cast<double>(w.begin_us);
    s.times.reserve(members.size());
    s.sizes.reserve(members.size());
    for (const Row* r : members) {
      double t = to_relative_seconds(r->time, w.begin_us);
      if (!s.times.empty() && t <= s.times.back()) {
        t = s.times.back() + 1e-6;  // +1 microsecond tie-break
        ++rep.jittered_ties;
      }
      s.times.push_back(t);
      s.sizes.push_back(r->size);
    }
    s.validate();
    streams.push_back(std::move(s));
  }
  if (streams.empty()) throw DataError("EmptyStream: no trades inside the window in " + path);
  if (report) *report = rep;
  return streams;
}

std::vector<QuoteSeries> load_quotes(const std::string& path, const WindowOptions& window) {
  csv::Reader reader(path);
  const int c_product = reader.require_column("product_id");
  const int c_time = reader.require_column("timestamp");
  const int c_bid = reader.require_column("best_bid");
  const int c_ask = reader.require_column("best_ask");

  struct Row {
    ParsedTime time;
    double bid, ask;
    std::size_t order;
  };
  std::map<std::string, std::vector<Row>> by_product;
  std::vector<std::string> fields;
  long long latest_ceil = std::numeric_limits<long long>::min();
  std::size_t n_rows = 0;
  while (reader.next(fields)) {
    Row r;
    r.time = parse_timestamp(fields[c_time], path, reader.line_number());
    r.bid = csv::parse_double(fields[c_bid], path, reader.line_number(), "best_bid");
    r.ask = csv::parse_double(fields[c_ask], path, reader.line_number(), "best_ask");
    if (r.ask < r.bid) {
      throw DataError(path + ":" + std::to_string(reader.line_number()) +
                      ": crossed quote (best_ask < best_bid)");
    }
    r.order = n_rows++;
    latest_ceil = std::max(latest_ceil, ceil_us(r.time));
    by_product[fields[c_product]].push_back(r);
  }
  if (by_product.empty()) throw DataError("no quote rows in " + path);

  const ResolvedWindow w = resolve_window(window, latest_ceil);
  const double length = w.length_s();

  std::vector<QuoteSeries> out;
  for (auto& [product, rows] : by_product) {
    std::sort(rows.begin(), rows.end(), [&](const Row& a, const Row& b) {
      const double ta = to_relative_seconds(a.time, w.begin_us);
      const double tb = to_relative_seconds(b.time, w.begin_us);
      if (ta != tb) return ta < tb;
      return a.order < b.order;
    });
    QuoteSeries q;
    q.product_id = product;
    q.window = {0.0, length};
    const Row* carry_in = nullptr;
    for (const Row& r : rows) {
      const double t = to_relative_seconds(r.time, w.begin_us);
      if (t <= 0.0) {
        carry_in = &r;  // last quote at or before the window start
      } else if (t <= length) {
        if (q.timestamps.empty() && carry_in) {
          q.timestamps.push_back(0.0);
          q.best_bid.push_back(carry_in->bid);
          q.best_ask.push_back(carry_in->ask);
          carry_in = nullptr;
        }
        q.timestamps.push_back(t);
        q.best_bid.push_back(r.bid);
        q.best_ask.push_back(r.ask);
      }
    }
    if (q.timestamps.empty() && carry_in) {
      q.timestamps.push_back(0.0);
      q.best_bid.push_back(carry_in->bid);
      q.best_ask.push_back(carry_in->ask);
    }
    if (!q.timestamps.empty()) out.push_back(std::move(q));
  }
  if (out.empty()) throw DataError("no quotes inside the window in " + path);
  return out;
}

std::vector<SnapshotSeries> load_snapshots(const std::string& path) {
  csv::Reader reader(path);
  const int c_product = reader.require_column("product_id");
  const int c_time = reader.require_column("timestamp");
  const int c_level = reader.require_column("level_index");
  const int c_offset = reader.require_column("price_offset_ticks");
  const int c_volume = reader.require_column("volume_mwh");
  const int c_side = reader.require_column("side");

  struct LevelRow {
    long long level;
    BookLevelRow data;
  };
  std::map<std::pair<std::string, int>, std::map<long long, std::vector<LevelRow>>> grouped;
  std::map<long long, double> snap_frac;  // fractional microseconds per snapshot time
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    const ParsedTime pt = parse_timestamp(fields[c_time], path, reader.line_number());
    const Side side = parse_side(fields[c_side], path, reader.line_number());
    LevelRow lr;
    lr.level = csv::parse_int(fields[c_level], path, reader.line_number(), "level_index");
    lr.data.offset_ticks =
        csv::parse_double(fields[c_offset], path, reader.line_number(), "price_offset_ticks");
    lr.data.volume =
        csv::parse_double(fields[c_volume], path, reader.line_number(), "volume_mwh");
    if (lr.data.offset_ticks < 0.0) {
      throw DataError(path + ":" + std::to_string(reader.line_number()) +
                      ": negative price offset");
    }
    if (lr.data.volume < 0.0) {
      throw DataError(path + ":" + std::to_string(reader.line_number()) + ": negative volume");
    }
    grouped[{fields[c_product], side == Side::Buy ? 0 : 1}][pt.int_us].push_back(lr);
    snap_frac[pt.int_us] = pt.frac_us;
  }
  if (grouped.empty()) throw DataError("no snapshot rows in " + path);

  std::vector<SnapshotSeries> out;
  for (auto& [key, by_time] : grouped) {
    SnapshotSeries series;
    series.product_id = key.first;
    series.side = key.second == 0 ? Side::Buy : Side::Sell;
    for (auto& [int_us, levels] : by_time) {
      std::sort(levels.begin(), levels.end(), [](const LevelRow& a, const LevelRow& b) {
        if (a.data.offset_ticks != b.data.offset_ticks)
          return a.data.offset_ticks < b.data.offset_ticks;
        return a.level < b.level;
      });
      BookSnapshot snap;
      snap.epoch_us = static_cast<double>(int_us) + snap_frac[int_us];
      snap.levels.reserve(levels.size());
      for (const LevelRow& lr : levels) snap.levels.push_back(lr.data);
      series.snapshots.push_back(std::move(snap));
    }
    out.push_back(std::move(series));
  }
  return out;
}

void write_trades(const std::string& path, const std::vector<EventStream>& streams,
                  double default_size, double price) {
  struct OutRow {
    double sort_key;
    std::size_t stream;
    std::size_t index;
    std::string field;
  };
  std::vector<OutRow> rows;
  for (std::size_t si = 0; si < streams.size(); ++si) {
    const EventStream& s = streams[si];
    const long long begin_us = std::llround(s.window_begin_epoch_us);
    for (std::size_t i = 0; i < s.times.size(); ++i) {
      rows.push_back({s.window_begin_epoch_us + s.times[i] * 1e6, si, i,
                      encode_time(s.times[i], begin_us)});
    }
  }
  std::sort(rows.begin(), rows.end(), [&](const OutRow& a, const OutRow& b) {
    if (a.sort_key != b.sort_key) return a.sort_key < b.sort_key;
    if (a.stream != b.stream) return a.stream < b.stream;
    return a.index < b.index;
  });

  csv::Writer writer(path, {"product_id", "timestamp", "side", "size_mwh", "price_eur"});
  const std::string price_str = csv::format_double(price);
  for (const OutRow& r : rows) {
    const EventStream& s = streams[r.stream];
    const double size = s.sizes.empty() ? default_size : s.sizes[r.index];
    writer.write_row(
        {s.product_id, r.field, to_string(s.side), csv::format_double(size), price_str});
  }
}

VolumeProfile build_volume_profile(const EventStream& stream, double bucket_width) {
  if (bucket_width <= 0.0) throw ConfigError("bucket width must be positive");
  const double length = stream.window.length();
  const long long n_buckets = std::llround(length / bucket_width);
  if (n_buckets < 1 || std::abs(static_cast<double>(n_buckets) * bucket_width - length) >
                           1e-9 * std::max(1.0, length)) {
    throw ConfigError("bucket width must divide the window length");
  }
  if (stream.times.empty() || stream.sizes.size() != stream.times.size()) {
    throw DataError("volume profile requires a non-empty stream with per-event sizes");
  }

  VolumeProfile profile;
  profile.bucket_width = bucket_width;
  profile.volumes.assign(static_cast<std::size_t>(n_buckets), 0.0);
  for (std::size_t i = 0; i < stream.times.size(); ++i) {
    const double rel = stream.times[i] - stream.window.begin;
    auto k = static_cast<std::size_t>(rel / bucket_width);
    k = std::min(k, profile.volumes.size() - 1);  // event exactly at window end
    profile.volumes[k] += stream.sizes[i];
  }

  double total = 0.0;
  for (double v : profile.volumes) total += v;
  if (!(total > 0.0)) throw DataError("volume profile: zero total volume");
  const double mean = total / static_cast<double>(n_buckets);

  std::vector<double> floored(profile.volumes);
  for (double& v : floored) v = std::max(v, 1e-6 * mean);
  double fmean = 0.0;
  for (double v : floored) fmean += v;
  fmean /= static_cast<double>(n_buckets);
  profile.factors.resize(floored.size());
  for (std::size_t i = 0; i < floored.size(); ++i) profile.factors[i] = floored[i] / fmean;
  return profile;
}

}  // namespace oflow
