#include "oflow/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>

#include "oflow/common.hpp"

namespace oflow::csv {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  // Strip a trailing carriage return from files written with CRLF endings.
  if (!fields.empty() && !fields.back().empty() && fields.back().back() == '\r') {
    fields.back().pop_back();
  }
  return fields;
}

}  // namespace

Reader::Reader(const std::string& path) : path_(path), in_(path) {
  if (!in_) throw DataError("cannot open CSV file: " + path);
  std::string line;
  if (!std::getline(in_, line)) throw DataError("empty CSV file (no header): " + path);
  header_ = split_line(line);
  line_ = 1;
}

int Reader::column(const std::string& name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return static_cast<int>(i);
  }
  return -1;
}

int Reader::require_column(const std::string& name) const {
  const int idx = column(name);
  if (idx < 0) throw DataError(path_ + ": missing required column '" + name + "'");
  return idx;
}

bool Reader::next(std::vector<std::string>& fields) {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (line.empty() || line == "\r") continue;  // skip blank lines
    fields = split_line(line);
    if (fields.size() != header_.size()) {
      throw DataError(path_ + ":" + std::to_string(line_) + ": expected " +
                      std::to_string(header_.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    return true;
  }
  return false;
}

Writer::Writer(const std::string& path, const std::vector<std::string>& header)
    : path_(path), out_(path), n_columns_(header.size()) {
  if (!out_) throw DataError("cannot open CSV file for writing: " + path);
  write_row(header);
}

void Writer::write_row(const std::vector<std::string>& fields) {
  if (fields.size() != n_columns_) {
    throw DataError(path_ + ": row has " + std::to_string(fields.size()) +
                    " fields, header has " + std::to_string(n_columns_));
  }
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out_ << ',';
    out_ << fields[i];
  }
  out_ << '\n';
  if (!out_) throw DataError("write failed: " + path_);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, const std::string& path, std::size_t line,
                    const std::string& column) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE) {
    throw DataError(path + ":" + std::to_string(line) + ": column '" + column +
                    "': cannot parse number from '" + s + "'");
  }
  return v;
}

long long parse_int(const std::string& s, const std::string& path, std::size_t line,
                    const std::string& column) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE) {
    throw DataError(path + ":" + std::to_string(line) + ": column '" + column +
                    "': cannot parse integer from '" + s + "'");
  }
  return v;
}

}  // namespace oflow::csv
