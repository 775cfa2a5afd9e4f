#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "fbmlab/fbm.hpp"
#include "fbmlab/rde.hpp"

namespace fbmlab {

static_assert(std::endian::native == std::endian::little,
              "binary path blocks are little-endian");

/// Deterministic CSV writer: %.17g doubles, LF line endings.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns)
      : out_(path, std::ios::binary) {
    if (!out_) throw ConfigError("cannot open '" + path + "' for writing");
    for (std::size_t i = 0; i < columns.size(); ++i)
      out_ << (i ? "," : "") << columns[i];
    out_ << "\n";
  }

  void row(const std::vector<double>& values) {
    char buf[40];
    for (std::size_t i = 0; i < values.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", values[i]);
      out_ << (i ? "," : "") << buf;
    }
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

/// CSV export: columns t, B^1..B^d.
inline void write_fbm_csv(const std::string& path, const FbmPath& p) {
  std::vector<std::string> cols = {"t"};
  for (Eigen::Index c = 0; c < p.values.rows(); ++c)
    cols.push_back("B" + std::to_string(c + 1));
  CsvWriter csv(path, cols);
  for (std::size_t k = 0; k < p.grid.points.size(); ++k) {
    std::vector<double> row = {p.grid.points[k]};
    for (Eigen::Index c = 0; c < p.values.rows(); ++c)
      row.push_back(p.values(c, static_cast<Eigen::Index>(k)));
    csv.row(row);
  }
}

// Compact binary block: magic "FBM1", then little-endian H (f64), N (u64),
// d (u64), seed (u64), then the N+1 grid times and the d x (N+1) component
// values (component-major), all f64.
inline void write_fbm_binary(const std::string& path, const FbmPath& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out.write("FBM1", 4);
  const double h = p.hurst.value();
  const std::uint64_t n = p.grid.cells();
  const auto d = static_cast<std::uint64_t>(p.values.rows());
  const std::uint64_t seed = p.seed;
  out.write(reinterpret_cast<const char*>(&h), 8);
  out.write(reinterpret_cast<const char*>(&n), 8);
  out.write(reinterpret_cast<const char*>(&d), 8);
  out.write(reinterpret_cast<const char*>(&seed), 8);
  for (double t : p.grid.points) out.write(reinterpret_cast<const char*>(&t), 8);
  for (Eigen::Index c = 0; c < p.values.rows(); ++c)
    for (std::size_t k = 0; k < p.grid.points.size(); ++k) {
      const double v = p.values(c, static_cast<Eigen::Index>(k));
      out.write(reinterpret_cast<const char*>(&v), 8);
    }
}

inline FbmPath read_fbm_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  char magic[4];
  in.read(magic, 4);
  if (std::string(magic, 4) != "FBM1") throw ConfigError("bad magic in '" + path + "'");
  double h;
  std::uint64_t n, d, seed;
  in.read(reinterpret_cast<char*>(&h), 8);
  in.read(reinterpret_cast<char*>(&n), 8);
  in.read(reinterpret_cast<char*>(&d), 8);
  in.read(reinterpret_cast<char*>(&seed), 8);
  TimeGrid grid;
  grid.points.resize(n + 1);
  for (auto& t : grid.points) in.read(reinterpret_cast<char*>(&t), 8);
  grid = TimeGrid::from_points(grid.points);
  Eigen::MatrixXd values(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n + 1));
  for (Eigen::Index c = 0; c < values.rows(); ++c)
    for (std::uint64_t k = 0; k <= n; ++k)
      in.read(reinterpret_cast<char*>(&values(c, static_cast<Eigen::Index>(k))), 8);
  if (!in) throw ConfigError("truncated path block in '" + path + "'");
  return FbmPath{HurstParam(h), grid, std::move(values), seed, SampleMethod::cholesky, {}};
}

/// Solution export: t, X^1..X^n and, when present, vec(J) column-major.
inline void write_solution_csv(const std::string& path, const SolutionPath& sol) {
  std::vector<std::string> cols = {"t"};
  for (Eigen::Index i = 0; i < sol.X.cols(); ++i) cols.push_back("X" + std::to_string(i + 1));
  if (sol.has_jacobian())
    for (Eigen::Index j = 0; j < sol.X.cols(); ++j)
      for (Eigen::Index i = 0; i < sol.X.cols(); ++i)
        cols.push_back("J" + std::to_string(i + 1) + std::to_string(j + 1));
  CsvWriter csv(path, cols);
  for (std::size_t k = 0; k < sol.grid.points.size(); ++k) {
    std::vector<double> row = {sol.grid.points[k]};
    for (Eigen::Index i = 0; i < sol.X.cols(); ++i)
      row.push_back(sol.X(static_cast<Eigen::Index>(k), i));
    if (sol.has_jacobian())
      for (Eigen::Index j = 0; j < sol.X.cols(); ++j)
        for (Eigen::Index i = 0; i < sol.X.cols(); ++i) row.push_back(sol.J[k](i, j));
    csv.row(row);
  }
}

}  // namespace fbmlab
