#include "warpband/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "warpband/errors.hpp"

namespace warpband::csv {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) fields.push_back(trim(cur));
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

double parse_cell(const std::string& cell, int data_row,
                  const std::string& column) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || cell.empty()) {
    throw IoError("malformed numeric cell '" + cell + "' at row " +
                  std::to_string(data_row) + ", column '" + column + "'");
  }
  return v;
}

}  // namespace

Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw IoError("empty file: " + path);
  Table table;
  table.columns = split_line(line);
  if (table.columns.empty()) throw IoError("missing header row: " + path);

  std::set<std::string> seen;
  for (const auto& c : table.columns) {
    if (c.empty()) throw IoError("empty column name in header: " + path);
    if (!seen.insert(c).second)
      throw IoError("duplicate column name '" + c + "' in " + path);
  }

  int data_row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++data_row;
    const auto fields = split_line(line);
    if (fields.size() != table.columns.size()) {
      throw IoError("row " + std::to_string(data_row) + " has " +
                    std::to_string(fields.size()) + " fields, expected " +
                    std::to_string(table.columns.size()) + ": " + path);
    }
    std::vector<double> row(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c)
      row[c] = parse_cell(fields[c], data_row, table.columns[c]);
    table.rows.push_back(std::move(row));
  }
  if (table.rows.empty()) throw IoError("zero usable rows: " + path);
  return table;
}

void write_table(const std::string& path,
                 const std::vector<std::string>& columns,
                 const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write file: " + path);
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c) out << ',';
    out << columns[c];
  }
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      out << format_double(row[c]);
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace warpband::csv
