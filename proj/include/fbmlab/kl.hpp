#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "fbmlab/fbm.hpp"
#include "fbmlab/rng.hpp"
#include "fbmlab/volterra.hpp"

namespace fbmlab {

// Karhunen-Loeve-type expansion built from the Volterra representation:
// orthonormalizing f_k(t) = (1-t)^{k-1} in L^2[0,1] gives l'_k, and
// h_k(t) = int_0^t K(t,u) l'_k(u) du yields B^n_t = sum_{k<=n} h_k(t) Z_k.
//
// The Gram-Schmidt result is written down directly through the shifted
// Legendre three-term recurrence in the variable 1-2t: the monomial Gram
// matrix is a Hilbert matrix and naive orthogonalization is hopeless beyond
// small k.  All evaluation goes through the recurrence as well; the monomial
// coefficient table is produced only for inspection and export.

struct KlBasis {
  int order = 0;
  HurstParam hurst;
  TimeGrid quad_grid;
  /// polynomial coefficients of l'_k in t (row k-1, degree k-1); export only
  std::vector<std::vector<double>> ell_prime;
  /// h_funcs(k-1, i) = h_k(t_i) on the quadrature grid points
  Eigen::MatrixXd h_funcs;
  /// kernel_cells(i, j) = int_{cell j} K(t_i, u) du, j < i
  Eigen::MatrixXd kernel_cells;
  /// ell_mid(j, k-1) = l'_k at the j-th quadrature midpoint
  Eigen::MatrixXd ell_mid;
};

/// l'_k(t) for k = 1..n via the Legendre recurrence at x = 1-2t (stable for
/// every admissible order).
inline void eval_ell_prime_all(int n, double t, std::vector<double>& out) {
  out.resize(static_cast<std::size_t>(std::max(n, 0)));
  if (n < 1) return;
  const double x = 1.0 - 2.0 * t;
  double pm1 = 1.0, pm = x;
  out[0] = 1.0;
  if (n > 1) out[1] = std::sqrt(3.0) * x;
  for (int m = 1; m + 1 < n; ++m) {
    const double pnext = ((2.0 * m + 1.0) * x * pm - m * pm1) / (m + 1.0);
    pm1 = pm;
    pm = pnext;
    out[static_cast<std::size_t>(m + 1)] = std::sqrt(2.0 * (m + 1.0) + 1.0) * pnext;
  }
}

inline double eval_ell_prime(int k, double t) {
  std::vector<double> buf;
  eval_ell_prime_all(k, t, buf);
  return buf[static_cast<std::size_t>(k - 1)];
}

namespace detail {

/// Monomial coefficients (in t) of sqrt(2k-1) P_{k-1}(1-2t), for export.
inline std::vector<std::vector<double>> legendre_shifted_coeffs(int n) {
  std::vector<std::vector<double>> polys;
  if (n < 1) return polys;
  polys.push_back({1.0});
  if (n > 1) polys.push_back({1.0, -2.0});  // x = 1 - 2t
  for (int m = 1; m + 1 < n; ++m) {
    // (m+1) P_{m+1} = (2m+1) x P_m - m P_{m-1}
    const auto& pm = polys[static_cast<std::size_t>(m)];
    const auto& pm1 = polys[static_cast<std::size_t>(m - 1)];
    std::vector<double> next(pm.size() + 1, 0.0);
    for (std::size_t i = 0; i < pm.size(); ++i) {
      next[i] += (2.0 * m + 1.0) * pm[i];
      next[i + 1] -= 2.0 * (2.0 * m + 1.0) * pm[i];
    }
    for (std::size_t i = 0; i < pm1.size(); ++i) next[i] -= m * pm1[i];
    for (auto& c : next) c /= (m + 1.0);
    polys.push_back(std::move(next));
  }
  for (int k = 1; k <= n; ++k) {
    const double norm = std::sqrt(2.0 * k - 1.0);
    for (auto& c : polys[static_cast<std::size_t>(k - 1)]) c *= norm;
  }
  return polys;
}

/// Cell integrals of K(t_i, .) with the endpoint singularities (u -> 0 and
/// u -> t_i, both of order |H-1/2|) integrated via frozen smooth factors.
inline Eigen::MatrixXd kernel_cell_integrals(const HurstParam& hurst, const TimeGrid& grid) {
  const std::size_t n = grid.cells();
  Eigen::MatrixXd cells =
      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n + 1), static_cast<Eigen::Index>(n));
  if (hurst.is_brownian()) {
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t j = 0; j < i; ++j)
        cells(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = grid.dt(j);
    return cells;
  }
  const double H = hurst.value();
  const double e_origin = -std::abs(H - 0.5);  // K(t,u) ~ u^{e_origin} as u -> 0
  for (std::size_t i = 1; i <= n; ++i) {
    const double t = grid.points[i];
    for (std::size_t j = 0; j < i; ++j) {
      const double m = grid.midpoint(j);
      const double km = volterra_kernel(hurst, t, m);
      if (j + 1 == i) {
        // diagonal cell: K ~ (t-u)^{H-1/2} times a frozen smooth part
        const double frozen = km * std::pow(t - m, 0.5 - H);
        cells(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            frozen * std::pow(grid.dt(j), H + 0.5) / (H + 0.5);
      } else if (j == 0) {
        // origin cell: K ~ u^{e_origin} times a frozen smooth part
        const double frozen = km * std::pow(m, -e_origin);
        cells(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            frozen * std::pow(grid.points[1], 1.0 + e_origin) / (1.0 + e_origin);
      } else {
        cells(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = km * grid.dt(j);
      }
    }
  }
  return cells;
}

inline std::uint64_t kl_coeff_stream(std::uint64_t path_index, int component) {
  return RandomStream::stream_id(
      path_index, (rng_tag::kl_coefficients << 8) | static_cast<std::uint32_t>(component));
}

inline std::uint64_t kl_increment_stream(std::uint64_t path_index, int component) {
  return RandomStream::stream_id(
      path_index, (rng_tag::kl_increments << 8) | static_cast<std::uint32_t>(component));
}

}  // namespace detail

/// Orders beyond this are refused: they carry no additional resolvable
/// variance at the supported quadrature sizes.
constexpr int kMaxBasisOrder = 64;

/// Monomial coefficients stay representable in double precision only up to
/// roughly this order (entries grow like 4^k); the exported table is capped.
constexpr int kMaxCoefficientOrder = 30;

/// Build the basis of order n (0 allowed: empty truncation) on a uniform
/// quadrature grid over [0,1].
inline KlBasis build_basis(int n, const HurstParam& hurst, std::size_t quad_cells = 512) {
  if (n < 0) throw DomainError("basis order must be nonnegative");
  if (n > kMaxBasisOrder)
    throw DomainError("basis order capped at " + std::to_string(kMaxBasisOrder));
  KlBasis basis{n, hurst, TimeGrid::regular(1.0, quad_cells), {}, {}, {}, {}};
  basis.ell_prime = detail::legendre_shifted_coeffs(std::min(n, kMaxCoefficientOrder));
  basis.kernel_cells = detail::kernel_cell_integrals(hurst, basis.quad_grid);

  if (n > 0 && quad_cells < 4 * static_cast<std::size_t>(n))
    throw DomainError("quadrature grid too coarse for the requested order (need >= 4n cells)");

  const std::size_t nq = basis.quad_grid.cells();
  basis.ell_mid.resize(static_cast<Eigen::Index>(nq), std::max(n, 0));
  std::vector<double> buf;
  for (std::size_t j = 0; j < nq; ++j) {
    eval_ell_prime_all(n, basis.quad_grid.midpoint(j), buf);
    for (int k = 0; k < n; ++k) basis.ell_mid(static_cast<Eigen::Index>(j), k) = buf[static_cast<std::size_t>(k)];
  }
  if (n > 0) {
    // Triangular re-orthonormalization in the discrete (midpoint, dt-weighted)
    // inner product: this is the Gram-Schmidt of the f_k in the sampler's own
    // geometry and makes the Bessel bound sum h_k(t)^2 <= Var B_t exact.  The
    // correction is O(quadrature error) away from the identity.
    Eigen::VectorXd w(static_cast<Eigen::Index>(nq));
    for (std::size_t j = 0; j < nq; ++j) w(static_cast<Eigen::Index>(j)) = basis.quad_grid.dt(j);
    const Eigen::MatrixXd gram = basis.ell_mid.transpose() * w.asDiagonal() * basis.ell_mid;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success)
      throw DomainError("discrete basis Gram matrix is not positive definite");
    basis.ell_mid = llt.matrixL().solve(basis.ell_mid.transpose()).transpose();
  }

  const auto np = static_cast<Eigen::Index>(basis.quad_grid.points.size());
  basis.h_funcs = Eigen::MatrixXd::Zero(std::max(n, 0), np);
  for (Eigen::Index i = 1; i < np; ++i)
    for (int k = 0; k < n; ++k) {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < i; ++j)
        acc += basis.kernel_cells(i, j) * basis.ell_mid(j, k);
      basis.h_funcs(k, i) = acc;
    }
  return basis;
}

/// L^2[0,1] Gram matrix of the l'_k via Gauss-Legendre quadrature (exact for
/// the polynomial products); orthonormality shows up as closeness to I.
inline Eigen::MatrixXd basis_gram_matrix(const KlBasis& basis, int upto) {
  const int n = std::min(upto, basis.order);
  // (n+1)-point Gauss-Legendre integrates degree 2n+1 >= 2n-2 exactly; nodes
  // by Newton iteration on P_{n+1}.
  const int q = n + 1;
  std::vector<double> node(static_cast<std::size_t>(q)), weight(static_cast<std::size_t>(q));
  for (int i = 0; i < q; ++i) {
    double x = std::cos(3.14159265358979323846 * (i + 0.75) / (q + 0.5));
    for (int it = 0; it < 100; ++it) {
      double pm1 = 1.0, pm = x;
      for (int m = 1; m < q; ++m) {
        const double pn = ((2.0 * m + 1.0) * x * pm - m * pm1) / (m + 1.0);
        pm1 = pm;
        pm = pn;
      }
      const double dp = q * (x * pm - pm1) / (x * x - 1.0);
      const double dx = pm / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) {
        node[static_cast<std::size_t>(i)] = x;
        weight[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
        break;
      }
    }
  }
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
  std::vector<double> vals;
  for (int i = 0; i < q; ++i) {
    const double t = 0.5 * (node[static_cast<std::size_t>(i)] + 1.0);
    const double w = 0.5 * weight[static_cast<std::size_t>(i)];
    eval_ell_prime_all(n, t, vals);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) G(a, b) += w * vals[static_cast<std::size_t>(a)] * vals[static_cast<std::size_t>(b)];
  }
  return G;
}

/// Discrete variance of the full Volterra-quadrature path at grid point i.
inline double kl_full_variance(const KlBasis& basis, std::size_t point_index) {
  double acc = 0.0;
  for (std::size_t j = 0; j < point_index; ++j) {
    const double kbar = basis.kernel_cells(static_cast<Eigen::Index>(point_index),
                                           static_cast<Eigen::Index>(j));
    acc += kbar * kbar / basis.quad_grid.dt(j);
  }
  return acc;
}

namespace detail {

inline std::vector<std::size_t> subgrid_indices(const KlBasis& basis, const TimeGrid& grid) {
  std::vector<std::size_t> idx(grid.points.size());
  for (std::size_t k = 0; k < grid.points.size(); ++k)
    idx[k] = basis.quad_grid.index_of(grid.points[k]);
  return idx;
}

}  // namespace detail

/// B^n on `grid` (grid points must lie on the quadrature grid) with i.i.d.
/// standard normal coefficients Z_k per component.
inline FbmPath truncated_fbm(const KlBasis& basis, const TimeGrid& grid, int d,
                             std::uint64_t seed, std::uint64_t path_index = 0) {
  const auto idx = detail::subgrid_indices(basis, grid);
  Eigen::MatrixXd values(d, static_cast<Eigen::Index>(grid.points.size()));
  values.setZero();
  for (int c = 0; c < d; ++c) {
    RandomStream stream(seed, detail::kl_coeff_stream(path_index, c));
    for (int k = 0; k < basis.order; ++k) {
      const double z = stream.normal(static_cast<std::uint64_t>(k));
      for (std::size_t p = 0; p < idx.size(); ++p)
        values(c, static_cast<Eigen::Index>(p)) +=
            basis.h_funcs(k, static_cast<Eigen::Index>(idx[p])) * z;
    }
  }
  return FbmPath{basis.hurst, grid, std::move(values), seed, SampleMethod::volterra, {}};
}

/// Joint realization of (full path, truncation, residual) from one set of
/// underlying Wiener increments; full = truncated + residual exactly.
struct KlJointDraw {
  FbmPath full;
  FbmPath truncated;
  FbmPath residual;
};

inline KlJointDraw kl_joint_draw(const KlBasis& basis, const TimeGrid& grid, int d,
                                 std::uint64_t seed, std::uint64_t path_index = 0) {
  const auto idx = detail::subgrid_indices(basis, grid);
  const std::size_t nq = basis.quad_grid.cells();
  const auto np = static_cast<Eigen::Index>(grid.points.size());
  Eigen::MatrixXd full(d, np), trunc(d, np), resid(d, np);

  std::vector<double> dw(nq);
  std::vector<double> z(static_cast<std::size_t>(std::max(basis.order, 0)));
  for (int c = 0; c < d; ++c) {
    RandomStream stream(seed, detail::kl_increment_stream(path_index, c));
    for (std::size_t j = 0; j < nq; ++j)
      dw[j] = std::sqrt(basis.quad_grid.dt(j)) * stream.normal(j);
    // projections Z_k = int l'_k dW
    for (int k = 0; k < basis.order; ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < nq; ++j)
        acc += basis.ell_mid(static_cast<Eigen::Index>(j), k) * dw[j];
      z[static_cast<std::size_t>(k)] = acc;
    }
    for (Eigen::Index p = 0; p < np; ++p) {
      const std::size_t gi = idx[static_cast<std::size_t>(p)];
      double b = 0.0;
      for (std::size_t j = 0; j < gi; ++j)
        b += basis.kernel_cells(static_cast<Eigen::Index>(gi), static_cast<Eigen::Index>(j)) *
             dw[j] / basis.quad_grid.dt(j);
      double bn = 0.0;
      for (int k = 0; k < basis.order; ++k)
        bn += basis.h_funcs(k, static_cast<Eigen::Index>(gi)) * z[static_cast<std::size_t>(k)];
      full(c, p) = b;
      trunc(c, p) = bn;
      resid(c, p) = b - bn;
    }
  }
  return KlJointDraw{FbmPath{basis.hurst, grid, std::move(full), seed, SampleMethod::volterra, {}},
                     FbmPath{basis.hurst, grid, std::move(trunc), seed, SampleMethod::volterra, {}},
                     FbmPath{basis.hurst, grid, std::move(resid), seed, SampleMethod::volterra, {}}};
}

/// B - B^n realized jointly with the truncation from the same draws.
inline FbmPath residual_fbm(const KlBasis& basis, const TimeGrid& grid, int d,
                            std::uint64_t seed, std::uint64_t path_index = 0) {
  return kl_joint_draw(basis, grid, d, seed, path_index).residual;
}

}  // namespace fbmlab
