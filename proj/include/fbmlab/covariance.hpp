#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "fbmlab/core.hpp"

namespace fbmlab {

/// Covariance of one fBm component, R(s,t) = (t^{2H} + s^{2H} - |t-s|^{2H})/2.
inline double covariance(const HurstParam& hurst, double s, double t) {
  if (s < 0.0 || t < 0.0) throw DomainError("covariance requires nonnegative times");
  const double twoH = 2.0 * hurst.value();
  return 0.5 * (std::pow(t, twoH) + std::pow(s, twoH) - std::pow(std::abs(t - s), twoH));
}

/// Rectangular increment E[(B_t - B_s)(B_v - B_u)].
inline double increment_covariance(const HurstParam& hurst, double s, double t, double u,
                                   double v) {
  const double twoH = 2.0 * hurst.value();
  auto r = [twoH](double a, double b) { return std::pow(std::abs(a - b), twoH); };
  return 0.5 * (r(t, u) + r(s, v) - r(t, v) - r(s, u));
}

/// Full (N+1)x(N+1) matrix R(t_i, t_j) on the grid points.
inline Eigen::MatrixXd covariance_matrix(const HurstParam& hurst, const TimeGrid& grid) {
  const auto n = static_cast<Eigen::Index>(grid.points.size());
  Eigen::MatrixXd R(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = covariance(hurst, grid.points[i], grid.points[j]);
      R(i, j) = v;
      R(j, i) = v;
    }
  return R;
}

/// NxN covariance of the grid increments, Gamma_ij = E[dB_i dB_j].
/// This equals the Gram matrix of the cell indicators in the Hilbert space H,
/// which is what the product-integration rules in cameron_martin.hpp build on.
inline Eigen::MatrixXd increment_covariance_matrix(const HurstParam& hurst,
                                                   const TimeGrid& grid) {
  const auto n = static_cast<Eigen::Index>(grid.cells());
  Eigen::MatrixXd G(n, n);
  if (grid.uniform) {
    // Stationary increments: one row of the Toeplitz matrix suffices.
    const double dt = grid.dt(0);
    const double twoH = 2.0 * hurst.value();
    const double scale = std::pow(dt, twoH);
    std::vector<double> gamma(grid.cells());
    for (std::size_t k = 0; k < grid.cells(); ++k) {
      const double kk = static_cast<double>(k);
      gamma[k] = 0.5 * scale *
                 (std::pow(kk + 1.0, twoH) - 2.0 * std::pow(kk, twoH) +
                  std::pow(std::abs(kk - 1.0), twoH));
    }
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) G(i, j) = gamma[static_cast<std::size_t>(std::abs(i - j))];
    return G;
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = increment_covariance(hurst, grid.points[i], grid.points[i + 1],
                                            grid.points[j], grid.points[j + 1]);
      G(i, j) = v;
      G(j, i) = v;
    }
  return G;
}

/// Autocovariance gamma(k) of unit-spacing fractional Gaussian noise scaled to step dt.
inline double fgn_autocovariance(const HurstParam& hurst, double dt, std::size_t lag) {
  const double twoH = 2.0 * hurst.value();
  const double k = static_cast<double>(lag);
  return 0.5 * std::pow(dt, twoH) *
         (std::pow(k + 1.0, twoH) - 2.0 * std::pow(k, twoH) + std::pow(std::abs(k - 1.0), twoH));
}

}  // namespace fbmlab
