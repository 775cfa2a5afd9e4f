#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fbmlab/covariance.hpp"
#include "fbmlab/volterra.hpp"

namespace fbmlab {

// Discrete versions of the operator K* and of the inner product of the
// Hilbert space H attached to the fBm covariance.
//
//   H > 1/2:  [K* f]_t = int_t^T f_r  d_r K(r,t) dr
//   H <= 1/2: [K* f]_t = K(T,t) f_t + int_t^T (f_r - f_t) d_r K(r,t) dr
//
// Functions are tabulated at cell midpoints.  Quadrature is midpoint product
// integration: the smooth factor f_r r^{H-1/2} is frozen per cell while the
// power factor (r-t)^{H-3/2} is integrated exactly, which keeps first-order
// accuracy through the singular cell.

/// K* applied to one scalar function tabulated at the cell midpoints.
/// Returns the midpoint tabulation of K* f.
inline std::vector<double> kstar_midpoint(const HurstParam& hurst, const TimeGrid& grid,
                                          const std::vector<double>& f_mid) {
  const std::size_t n = grid.cells();
  if (f_mid.size() != n) throw DomainError("kstar_midpoint: need one value per grid cell");
  if (hurst.is_brownian()) return f_mid;

  const double H = hurst.value();
  const double T = grid.horizon();
  const KernelConstants kc = kernel_constants(hurst);
  std::vector<double> out(n, 0.0);

  // midpoint^{H-1/2}, reused across evaluation points
  std::vector<double> rpow(n);
  for (std::size_t j = 0; j < n; ++j) rpow[j] = std::pow(grid.midpoint(j), H - 0.5);

  for (std::size_t k = 0; k < n; ++k) {
    const double t = grid.midpoint(k);
    const double pref = kc.dt_factor * std::pow(t, 0.5 - H);
    double acc = 0.0;
    if (H > 0.5) {
      // partial cell [m_k, t_{k+1}] carries the integrable singularity
      acc += f_mid[k] * rpow[k] * power_cell_integral(hurst, t, t, grid.points[k + 1]);
      for (std::size_t j = k + 1; j < n; ++j)
        acc += f_mid[j] * rpow[j] *
               power_cell_integral(hurst, t, grid.points[j], grid.points[j + 1]);
      out[k] = pref * acc;
    } else {
      // compensated form; the partial cell vanishes under the cell-constant
      // model of f (f_r - f_t = 0 there), which is exact for indicators
      for (std::size_t j = k + 1; j < n; ++j)
        acc += (f_mid[j] - f_mid[k]) * rpow[j] *
               power_cell_integral(hurst, t, grid.points[j], grid.points[j + 1]);
      out[k] = volterra_kernel(hurst, T, t) * f_mid[k] + pref * acc;
    }
  }
  return out;
}

/// K* on grid-point tabulations (averaged onto midpoints internally).  Entry 0
/// is the evaluation at the first cell midpoint: for H != 1/2 the operator
/// value at t = 0 itself is not finite.  At H = 1/2 the identity K* f = f is
/// returned exactly.
inline std::vector<double> kstar_apply(const HurstParam& hurst, const TimeGrid& grid,
                                       const std::vector<double>& f_grid) {
  const std::size_t n = grid.cells();
  if (f_grid.size() != n + 1) throw DomainError("kstar_apply: need one value per grid point");
  if (hurst.is_brownian()) return f_grid;

  const double H = hurst.value();
  const double T = grid.horizon();
  const KernelConstants kc = kernel_constants(hurst);
  std::vector<double> fm(n);
  for (std::size_t j = 0; j < n; ++j) fm[j] = 0.5 * (f_grid[j] + f_grid[j + 1]);
  std::vector<double> rpow(n);
  for (std::size_t j = 0; j < n; ++j) rpow[j] = std::pow(grid.midpoint(j), H - 0.5);

  std::vector<double> out(n + 1, 0.0);
  for (std::size_t k = 1; k <= n; ++k) {
    const double t = grid.points[k];
    const double pref = kc.dt_factor * std::pow(t, 0.5 - H);
    double acc = 0.0;
    if (H > 0.5) {
      for (std::size_t j = k; j < n; ++j)
        acc += fm[j] * rpow[j] * power_cell_integral(hurst, t, grid.points[j], grid.points[j + 1]);
      out[k] = pref * acc;
    } else if (k < n) {
      // singular cell: linear model of f, tempered power integrated exactly
      const double slope = (f_grid[k + 1] - f_grid[k]) / grid.dt(k);
      acc += slope * rpow[k] * tempered_cell_integral(hurst, t, t, grid.points[k + 1]);
      for (std::size_t j = k + 1; j < n; ++j)
        acc += (fm[j] - f_grid[k]) * rpow[j] *
               power_cell_integral(hurst, t, grid.points[j], grid.points[j + 1]);
      out[k] = volterra_kernel(hurst, T, t) * f_grid[k] + pref * acc;
    } else {
      out[k] = 0.0;  // boundary convention; K(T,T-) is not finite for H < 1/2
    }
  }
  // regularized boundary value: evaluate at the first cell midpoint
  std::vector<double> fmid_eval = kstar_midpoint(hurst, grid, fm);
  out[0] = fmid_eval.empty() ? f_grid[0] : fmid_eval[0];
  return out;
}

/// Inner product <f,g>_H for R^d-valued functions tabulated at cell midpoints
/// (rows = cells, cols = components).
///
/// H > 1/2 uses the weighted double integral H(2H-1) || s-t |^{2H-2} with the
/// diagonal singularity integrated in closed form over cell pairs (the cell
/// weights coincide with the increment covariance).  H <= 1/2 falls back to
/// the isometry <K* f, K* g>_{L^2}.
inline double h_inner_product_midpoint(const HurstParam& hurst, const TimeGrid& grid,
                                       const Eigen::MatrixXd& f_mid,
                                       const Eigen::MatrixXd& g_mid) {
  const auto n = static_cast<Eigen::Index>(grid.cells());
  if (f_mid.rows() != n || g_mid.rows() != n || f_mid.cols() != g_mid.cols())
    throw DomainError("h_inner_product: tabulation shape mismatch");
  const double H = hurst.value();

  if (H > 0.5) {
    // <f,g> = sum_{i,j} Gamma_ij <f_i, g_j>
    if (grid.uniform) {
      const double dt = grid.dt(0);
      std::vector<double> gamma(grid.cells());
      for (std::size_t k = 0; k < grid.cells(); ++k)
        gamma[k] = fgn_autocovariance(hurst, dt, k);
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
          acc += gamma[static_cast<std::size_t>(std::abs(i - j))] * f_mid.row(i).dot(g_mid.row(j));
      return acc;
    }
    const Eigen::MatrixXd G = increment_covariance_matrix(hurst, grid);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) acc += G(i, j) * f_mid.row(i).dot(g_mid.row(j));
    return acc;
  }

  // H <= 1/2: componentwise K*, then the midpoint L^2 pairing
  double acc = 0.0;
  std::vector<double> fc(grid.cells()), gc(grid.cells());
  for (Eigen::Index c = 0; c < f_mid.cols(); ++c) {
    for (Eigen::Index i = 0; i < n; ++i) {
      fc[static_cast<std::size_t>(i)] = f_mid(i, c);
      gc[static_cast<std::size_t>(i)] = g_mid(i, c);
    }
    const std::vector<double> kf = kstar_midpoint(hurst, grid, fc);
    const std::vector<double> kg = kstar_midpoint(hurst, grid, gc);
    for (std::size_t i = 0; i < grid.cells(); ++i) acc += grid.dt(i) * kf[i] * kg[i];
  }
  return acc;
}

/// Grid-point overload: values at the N+1 grid points are averaged onto cells.
inline double h_inner_product(const HurstParam& hurst, const TimeGrid& grid,
                              const Eigen::MatrixXd& f_grid, const Eigen::MatrixXd& g_grid) {
  const auto n = static_cast<Eigen::Index>(grid.cells());
  if (f_grid.rows() != n + 1 || g_grid.rows() != n + 1)
    throw DomainError("h_inner_product: need one value per grid point");
  Eigen::MatrixXd fm = 0.5 * (f_grid.topRows(n) + f_grid.bottomRows(n));
  Eigen::MatrixXd gm = 0.5 * (g_grid.topRows(n) + g_grid.bottomRows(n));
  return h_inner_product_midpoint(hurst, grid, fm, gm);
}

/// Scalar convenience overload.
inline double h_inner_product(const HurstParam& hurst, const TimeGrid& grid,
                              const std::vector<double>& f_grid,
                              const std::vector<double>& g_grid) {
  Eigen::MatrixXd F(static_cast<Eigen::Index>(f_grid.size()), 1);
  Eigen::MatrixXd G(static_cast<Eigen::Index>(g_grid.size()), 1);
  for (std::size_t i = 0; i < f_grid.size(); ++i) F(static_cast<Eigen::Index>(i), 0) = f_grid[i];
  for (std::size_t i = 0; i < g_grid.size(); ++i) G(static_cast<Eigen::Index>(i), 0) = g_grid[i];
  return h_inner_product(hurst, grid, F, G);
}

}  // namespace fbmlab
