#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "fbmlab/core.hpp"
#include "fbmlab/parallel.hpp"
#include "fbmlab/stats.hpp"

namespace fbmlab {

/// Product-Gaussian kernel density estimate on a fixed evaluation grid.
/// Points with density below `noise_floor` should be excluded from tail fits:
/// below roughly 10 expected samples per bandwidth window the relative error
/// of a KDE explodes.
struct DensityEstimate {
  double t = 0.0;
  Eigen::MatrixXd eval_points;     // m x n
  std::vector<double> density;     // p-hat at each evaluation point
  std::vector<double> stderrs;     // Monte-Carlo standard error per point
  Eigen::VectorXd bandwidth;       // per dimension
  std::size_t path_count = 0;
  double noise_floor = 0.0;
};

/// Silverman bandwidths h_i = sigma_i (4 / ((n+2) k))^{1/(n+4)}; degenerate
/// dimensions (zero spread) fall back to a fixed small width.
inline Eigen::VectorXd silverman_bandwidth(const Eigen::MatrixXd& samples) {
  const auto k = samples.rows();
  const auto n = samples.cols();
  if (k < 2) throw DomainError("bandwidth needs at least two samples");
  Eigen::VectorXd h(n);
  const double factor =
      std::pow(4.0 / ((static_cast<double>(n) + 2.0) * static_cast<double>(k)),
               1.0 / (static_cast<double>(n) + 4.0));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mean = samples.col(i).mean();
    const double var = (samples.col(i).array() - mean).square().sum() / (static_cast<double>(k) - 1.0);
    const double sd = std::sqrt(std::max(var, 0.0));
    h(i) = sd > 0.0 ? sd * factor : 1e-3;
  }
  return h;
}

inline DensityEstimate estimate_density(const Eigen::MatrixXd& samples,
                                        const Eigen::MatrixXd& eval_points,
                                        std::optional<Eigen::VectorXd> bandwidth = std::nullopt,
                                        unsigned workers = 0) {
  const auto k = samples.rows();
  const auto n = samples.cols();
  if (k == 0) throw DomainError("estimate_density needs samples");
  if (eval_points.cols() != n) throw DomainError("evaluation grid dimension mismatch");

  DensityEstimate est;
  est.eval_points = eval_points;
  est.path_count = static_cast<std::size_t>(k);
  est.bandwidth = bandwidth ? *bandwidth : silverman_bandwidth(samples);
  if ((est.bandwidth.array() <= 0.0).any()) throw DomainError("bandwidth must be positive");

  double window = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) window *= est.bandwidth(i);
  est.noise_floor = 10.0 / (static_cast<double>(k) * window);

  const auto m = eval_points.rows();
  est.density.assign(static_cast<std::size_t>(m), 0.0);
  est.stderrs.assign(static_cast<std::size_t>(m), 0.0);
  const double norm = std::pow(2.0 * 3.14159265358979324, -0.5 * static_cast<double>(n)) / window;

  parallel_for(static_cast<std::size_t>(m), workers, [&](std::size_t pi) {
    const Eigen::Index p = static_cast<Eigen::Index>(pi);
    CompensatedSum sum, sumsq;
    for (Eigen::Index s = 0; s < k; ++s) {
      double e = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double z = (eval_points(p, i) - samples(s, i)) / est.bandwidth(i);
        e += z * z;
      }
      const double v = norm * std::exp(-0.5 * e);
      sum.add(v);
      sumsq.add(v * v);
    }
    const double mean = sum.value() / static_cast<double>(k);
    const double var = std::max(sumsq.value() / static_cast<double>(k) - mean * mean, 0.0);
    est.density[pi] = mean;
    est.stderrs[pi] = std::sqrt(var / static_cast<double>(k));
  });
  return est;
}

/// Regular 1-d evaluation grid.
inline Eigen::MatrixXd eval_grid_1d(double lo, double hi, std::size_t points) {
  Eigen::MatrixXd g(static_cast<Eigen::Index>(points), 1);
  for (std::size_t i = 0; i < points; ++i)
    g(static_cast<Eigen::Index>(i), 0) =
        lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  return g;
}

/// Regular 2-d evaluation grid (row-major over y then x).
inline Eigen::MatrixXd eval_grid_2d(double lo0, double hi0, double lo1, double hi1,
                                    std::size_t per_dim) {
  Eigen::MatrixXd g(static_cast<Eigen::Index>(per_dim * per_dim), 2);
  for (std::size_t i = 0; i < per_dim; ++i)
    for (std::size_t j = 0; j < per_dim; ++j) {
      const auto r = static_cast<Eigen::Index>(i * per_dim + j);
      g(r, 0) = lo0 + (hi0 - lo0) * static_cast<double>(i) / static_cast<double>(per_dim - 1);
      g(r, 1) = lo1 + (hi1 - lo1) * static_cast<double>(j) / static_cast<double>(per_dim - 1);
    }
  return g;
}

/// Riemann integral of the estimate over its regular evaluation grid (1-d or
/// 2-d square grids).
inline double kde_integral(const DensityEstimate& est) {
  const auto m = est.eval_points.rows();
  if (est.eval_points.cols() == 1) {
    const double dx = est.eval_points(1, 0) - est.eval_points(0, 0);
    CompensatedSum s;
    for (std::size_t i = 0; i < est.density.size(); ++i) s.add(est.density[i] * dx);
    return s.value();
  }
  if (est.eval_points.cols() == 2) {
    const auto per_dim = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(m))));
    if (per_dim * per_dim != m) throw DomainError("kde_integral needs a square 2-d grid");
    const double dy = est.eval_points(1, 1) - est.eval_points(0, 1);
    const double dx = est.eval_points(per_dim, 0) - est.eval_points(0, 0);
    CompensatedSum s;
    for (std::size_t i = 0; i < est.density.size(); ++i) s.add(est.density[i] * dx * dy);
    return s.value();
  }
  throw DomainError("kde_integral supports 1-d and 2-d grids");
}

}  // namespace fbmlab
