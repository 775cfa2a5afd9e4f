#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "fbmlab/core.hpp"

namespace fbmlab {

// Level-1 p-variation over grid sub-partitions and the greedy partition count
// used by the concentration estimates.  Both run the same O(N^2) dynamic
// program on increment norms; level 1 is a documented lower bound for the
// full rough-path norm.

/// sup over sub-partitions of (sum |x_{t_{k+1}} - x_{t_k}|^p)^{1/p}, exact on
/// the grid (rows of `values` are time points).
inline double p_variation(const Eigen::MatrixXd& values, double p) {
  if (p < 1.0) throw DomainError("p-variation needs p >= 1");
  const auto n = values.rows();
  if (n < 2) return 0.0;
  std::vector<double> best(static_cast<std::size_t>(n), 0.0);
  double sup = 0.0;
  for (Eigen::Index j = 1; j < n; ++j) {
    double bj = 0.0;
    for (Eigen::Index i = 0; i < j; ++i) {
      const double w = std::pow((values.row(j) - values.row(i)).norm(), p);
      bj = std::max(bj, best[static_cast<std::size_t>(i)] + w);
    }
    best[static_cast<std::size_t>(j)] = bj;
    sup = std::max(sup, bj);
  }
  return std::pow(sup, 1.0 / p);
}

inline double p_variation(const std::vector<double>& values, double p) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(values.size()), 1);
  for (std::size_t i = 0; i < values.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = values[i];
  return p_variation(m, p);
}

/// Greedy stopping times tau_0 = 0, tau_{i+1} = first grid point u > tau_i
/// with ||x||^p_{p-var;[tau_i,u]} >= alpha; returns N = #{ i >= 1 : tau_i <
/// horizon }.  The local p-variation restarts from scratch on each block.
inline int greedy_partition_count(const Eigen::MatrixXd& values, double p, double alpha) {
  if (p < 1.0) throw DomainError("greedy partition needs p >= 1");
  if (!(alpha > 0.0)) throw DomainError("greedy partition needs alpha > 0");
  const auto n = values.rows();
  int count = 0;
  Eigen::Index start = 0;
  std::vector<double> best;
  while (start + 1 < n) {
    best.assign(static_cast<std::size_t>(n - start), 0.0);
    double local_sup = 0.0;
    Eigen::Index stop = -1;
    for (Eigen::Index u = start + 1; u < n; ++u) {
      double bu = 0.0;
      for (Eigen::Index i = start; i < u; ++i) {
        const double w = std::pow((values.row(u) - values.row(i)).norm(), p);
        bu = std::max(bu, best[static_cast<std::size_t>(i - start)] + w);
      }
      best[static_cast<std::size_t>(u - start)] = bu;
      local_sup = std::max(local_sup, bu);
      if (local_sup >= alpha) {
        stop = u;
        break;
      }
    }
    if (stop < 0) break;          // threshold never reached again
    if (stop == n - 1) break;     // tau landed on the horizon: not counted (< t)
    ++count;
    start = stop;
  }
  return count;
}

inline int greedy_partition_count(const std::vector<double>& values, double p, double alpha) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(values.size()), 1);
  for (std::size_t i = 0; i < values.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = values[i];
  return greedy_partition_count(m, p, alpha);
}

}  // namespace fbmlab
