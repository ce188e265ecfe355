#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "orthofield/sampling.hpp"

namespace orthofield::io {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shortest round-trippable decimal form of a double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// One CSV table: header plus numeric rows, written with full precision so
/// identical runs produce bit-identical files.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::initializer_list<double> vals) {
    std::vector<std::string> r;
    r.reserve(vals.size());
    for (double v : vals) r.push_back(format_double(v));
    rows.push_back(std::move(r));
  }

  void add_row(std::vector<std::string> cells) { rows.push_back(std::move(cells)); }
};

inline void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (std::size_t i = 0; i < table.header.size(); ++i)
    out << (i ? "," : "") << table.header[i];
  out << "\n";
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size())
      throw IoError("csv row width mismatch in " + path);
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

/// One point per row, columns = coordinates.
inline void write_point_set(const std::string& path, const sampling::PointSet& ps) {
  CsvTable t;
  for (int k = 0; k < ps.dim; ++k) t.header.push_back("x" + std::to_string(k + 1));
  for (Eigen::Index i = 0; i < ps.size(); ++i) {
    std::vector<std::string> row;
    for (int k = 0; k < ps.dim; ++k) row.push_back(format_double(ps.points(i, k)));
    t.add_row(std::move(row));
  }
  write_csv(path, t);
}

inline sampling::PointSet read_point_set(const std::string& path,
                                         sampling::Provenance provenance) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty file: " + path);
  int dim = 1;
  for (char c : line)
    if (c == ',') ++dim;
  std::vector<double> flat;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    int got = 0;
    while (std::getline(ss, cell, ',')) {
      flat.push_back(std::stod(cell));
      ++got;
    }
    if (got != dim) throw IoError("ragged csv row in " + path);
  }
  sampling::PointSet ps;
  ps.dim = dim;
  ps.provenance = provenance;
  const Eigen::Index n = static_cast<Eigen::Index>(flat.size()) / dim;
  ps.points.resize(n, dim);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int k = 0; k < dim; ++k) ps.points(i, k) = flat[i * dim + k];
  return ps;
}

}  // namespace orthofield::io
