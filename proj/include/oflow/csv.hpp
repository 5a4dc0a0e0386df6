#pragma once

// Minimal CSV reading/writing: header-row files, comma-separated, '.' decimal
// point, no quoting. Parse errors carry 1-based line numbers. Floats are
// written with 17 significant digits so that identical runs produce
// byte-identical files.

#include <cstddef>
#include <fstream>
#include <string>
#include <vector>

namespace oflow::csv {

class Reader {
 public:
  explicit Reader(const std::string& path);

  const std::vector<std::string>& header() const { return header_; }
  const std::string& path() const { return path_; }

  // Index of a column, or -1 when absent.
  int column(const std::string& name) const;
  // Index of a column; throws DataError naming the file when absent.
  int require_column(const std::string& name) const;

  // Reads the next data row into `fields`; returns false at end of file.
  // Throws DataError when a row has a different field count than the header.
  bool next(std::vector<std::string>& fields);

  // 1-based line number of the row most recently returned by next().
  std::size_t line_number() const { return line_; }

 private:
  std::string path_;
  std::ifstream in_;
  std::vector<std::string> header_;
  std::size_t line_ = 0;
};

class Writer {
 public:
  Writer(const std::string& path, const std::vector<std::string>& header);
  void write_row(const std::vector<std::string>& fields);

 private:
  std::string path_;
  std::ofstream out_;
  std::size_t n_columns_;
};

// Shortest-faithful decimal for a double: printf %.17g. Same bits → same text.
std::string format_double(double v);

// Strict numeric parses; throw DataError citing file/line/column on failure.
double parse_double(const std::string& s, const std::string& path, std::size_t line,
                    const std::string& column);
long long parse_int(const std::string& s, const std::string& path, std::size_t line,
                    const std::string& column);

}  // namespace oflow::csv
