#pragma once

#include <string>
#include <vector>

namespace warpband::csv {

// A fully numeric table: one header row, every cell a decimal real.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int n_rows() const { return static_cast<int>(rows.size()); }
  int n_cols() const { return static_cast<int>(columns.size()); }
};

// Strict reader: rejects missing files, duplicate column names, ragged rows
// and non-numeric cells (reported with 1-based data row and column name).
Table read_table(const std::string& path);

void write_table(const std::string& path,
                 const std::vector<std::string>& columns,
                 const std::vector<std::vector<double>>& rows);

// Shortest text that parses back to the same double is not what we want for
// diffable output; %.17g round-trips exactly and is stable.
std::string format_double(double v);

}  // namespace warpband::csv
