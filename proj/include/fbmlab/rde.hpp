#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "fbmlab/fbm.hpp"
#include "fbmlab/kl.hpp"
#include "fbmlab/vector_field.hpp"

namespace fbmlab {

enum class SchemeKind { euler, milstein2, wong_zakai_fine };

struct SolverScheme {
  SchemeKind kind = SchemeKind::milstein2;
  int refinement = 16;  // wong_zakai_fine: fine sub-cells per coarse cell

  static SolverScheme euler() { return {SchemeKind::euler, 1}; }
  static SolverScheme milstein2() { return {SchemeKind::milstein2, 1}; }
  static SolverScheme wong_zakai(int m = 16) {
    if (m < 4) throw DomainError("wong_zakai_fine needs refinement >= 4");
    return {SchemeKind::wong_zakai_fine, m};
  }
};

inline const char* scheme_name(SchemeKind k) {
  switch (k) {
    case SchemeKind::euler: return "euler";
    case SchemeKind::milstein2: return "milstein2";
    case SchemeKind::wong_zakai_fine: return "wong_zakai_fine";
  }
  return "?";
}

inline SchemeKind scheme_from_name(const std::string& s) {
  if (s == "euler") return SchemeKind::euler;
  if (s == "milstein2") return SchemeKind::milstein2;
  if (s == "wong_zakai_fine") return SchemeKind::wong_zakai_fine;
  throw ConfigError("unknown scheme '" + s + "'");
}

/// Discretized solution, optionally with the Jacobian flow J_t = dX_t/dx and
/// its inverse propagated alongside.  J and Jinv advance by one multiplier
/// per step (Jinv through the exact inverse of the same multiplier), so
/// J_k Jinv_k = I holds to roundoff and J_{s,t} = J_t Jinv_s is well posed.
struct SolutionPath {
  TimeGrid grid;
  Eigen::VectorXd x0;
  Eigen::MatrixXd X;  // (N+1) x n
  std::vector<Eigen::MatrixXd> J;
  std::vector<Eigen::MatrixXd> Jinv;
  std::uint64_t driver_seed = 0;
  SolverScheme scheme;
  std::vector<std::string> warnings;

  bool has_jacobian() const { return !J.empty(); }

  /// max_k || J_k Jinv_k - I ||_inf; detects drift of the inverse propagation
  double jacobian_consistency() const {
    double worst = 0.0;
    for (std::size_t k = 0; k < J.size(); ++k) {
      const Eigen::MatrixXd r =
          J[k] * Jinv[k] - Eigen::MatrixXd::Identity(J[k].rows(), J[k].cols());
      worst = std::max(worst, r.cwiseAbs().maxCoeff());
    }
    return worst;
  }
};

namespace detail {

constexpr double kBlowUpThreshold = 1e8;

struct StepWorkspace {
  std::vector<Eigen::VectorXd> V;   // V_j(x), j = 0..d
  std::vector<Eigen::MatrixXd> A;   // DV_j(x), j = 0..d
};

inline void check_state(const Eigen::VectorXd& x, std::size_t step) {
  if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kBlowUpThreshold)
    throw BlowUpError(step, "state blew up at step " + std::to_string(step));
}

/// One Euler/Milstein step; returns the Jacobian multiplier if wanted.
inline void taylor_step(const VectorFieldSystem& vf, SchemeKind kind, const Eigen::VectorXd& x,
                        double dt, const Eigen::VectorXd& db, Eigen::VectorXd& x_next,
                        Eigen::MatrixXd* multiplier) {
  const int n = vf.n, d = vf.d;
  Eigen::VectorXd drift = eval_field(vf, 0, x);
  Eigen::VectorXd diffusion = Eigen::VectorXd::Zero(n);
  std::vector<Eigen::VectorXd> V(static_cast<std::size_t>(d));
  for (int j = 1; j <= d; ++j) {
    V[static_cast<std::size_t>(j - 1)] = eval_field(vf, j, x);
    diffusion += V[static_cast<std::size_t>(j - 1)] * db(j - 1);
  }
  x_next = x + drift * dt + diffusion;

  const bool milstein = kind == SchemeKind::milstein2;
  std::vector<Eigen::MatrixXd> A;
  if (milstein || multiplier) {
    A.resize(static_cast<std::size_t>(d));
    for (int j = 1; j <= d; ++j) A[static_cast<std::size_t>(j - 1)] = jacobian_field(vf, j, x);
  }
  if (milstein) {
    // symmetric level-2 term: sum_{i,j} DV_j V_i dB^i dB^j / 2 with the
    // geometric (zero Levy area) signature of piecewise-linear drivers
    Eigen::VectorXd correction = Eigen::VectorXd::Zero(n);
    for (int j = 1; j <= d; ++j)
      correction += A[static_cast<std::size_t>(j - 1)] * diffusion * (0.5 * db(j - 1));
    x_next += correction;
  }
  if (multiplier) {
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
    for (int j = 1; j <= d; ++j) S += A[static_cast<std::size_t>(j - 1)] * db(j - 1);
    *multiplier = Eigen::MatrixXd::Identity(n, n) + jacobian_field(vf, 0, x) * dt + S;
    if (milstein) *multiplier += 0.5 * S * S;
  }
}

/// RK4 across one cell of a piecewise-linear driver (slope c = dB/dt),
/// jointly advancing the state and, optionally, the cell multiplier M with
/// dM = (DV_0 + sum_j DV_j c_j) M dt.
inline void rk4_linear_driver_step(const VectorFieldSystem& vf, const Eigen::VectorXd& x,
                                   double dt, const Eigen::VectorXd& slope,
                                   Eigen::VectorXd& x_next, Eigen::MatrixXd* multiplier) {
  const int n = vf.n, d = vf.d;
  auto f = [&](const Eigen::VectorXd& y) {
    Eigen::VectorXd r = eval_field(vf, 0, y);
    for (int j = 1; j <= d; ++j) r += eval_field(vf, j, y) * slope(j - 1);
    return r;
  };
  auto g = [&](const Eigen::VectorXd& y) {
    Eigen::MatrixXd r = jacobian_field(vf, 0, y);
    for (int j = 1; j <= d; ++j) r += jacobian_field(vf, j, y) * slope(j - 1);
    return r;
  };
  const Eigen::VectorXd k1 = f(x);
  const Eigen::VectorXd k2 = f(x + 0.5 * dt * k1);
  const Eigen::VectorXd k3 = f(x + 0.5 * dt * k2);
  const Eigen::VectorXd k4 = f(x + dt * k3);
  x_next = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (multiplier) {
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd m1 = g(x);
    const Eigen::MatrixXd m2 = g(x + 0.5 * dt * k1) * (I + 0.5 * dt * m1);
    const Eigen::MatrixXd m3 = g(x + 0.5 * dt * k2) * (I + 0.5 * dt * m2);
    const Eigen::MatrixXd m4 = g(x + dt * k3) * (I + dt * m3);
    *multiplier = I + dt / 6.0 * (m1 + 2.0 * m2 + 2.0 * m3 + m4);
  }
}

inline bool all_fields_constant(const VectorFieldSystem& vf) {
  for (const auto& field : vf.fields)
    for (const auto& e : field)
      if (e.kind != Expr::Kind::constant) return false;
  return true;
}

inline SolutionPath integrate(const VectorFieldSystem& vf, const FbmPath& driver,
                              const Eigen::VectorXd& x0, SolverScheme scheme,
                              bool with_jacobian) {
  if (driver.values.rows() != vf.d)
    throw DomainError("driver dimension does not match the vector field system");
  if (static_cast<int>(x0.size()) != vf.n) throw DomainError("x0 dimension mismatch");

  SolutionPath sol;
  sol.driver_seed = driver.seed;
  sol.scheme = scheme;
  sol.x0 = x0;

  const double H = driver.hurst.value();
  if (scheme.kind == SchemeKind::milstein2 && !(H > 1.0 / 3.0))
    throw DomainError("milstein2 requires H > 1/3");
  if (scheme.kind == SchemeKind::euler && H < 0.5)
    sol.warnings.push_back("euler scheme below H = 1/2 lacks a convergence guarantee");

  const std::size_t fine_cells = driver.grid.cells();
  const std::size_t m =
      scheme.kind == SchemeKind::wong_zakai_fine ? static_cast<std::size_t>(scheme.refinement) : 1;
  if (fine_cells % m != 0)
    throw DomainError("driver grid cells must be a multiple of the refinement factor");
  const std::size_t coarse_cells = fine_cells / m;

  sol.grid.points.resize(coarse_cells + 1);
  for (std::size_t k = 0; k <= coarse_cells; ++k)
    sol.grid.points[k] = driver.grid.points[k * m];
  sol.grid.uniform = driver.grid.uniform;

  sol.X.resize(static_cast<Eigen::Index>(coarse_cells + 1), vf.n);
  sol.X.row(0) = x0.transpose();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(vf.n, vf.n);
  if (with_jacobian) {
    sol.J.assign(coarse_cells + 1, I);
    sol.Jinv.assign(coarse_cells + 1, I);
  }

  // constant fields integrate exactly in closed form for every scheme (the
  // correction terms vanish); this also skips the expression-tree walks that
  // dominate long additive runs
  if (all_fields_constant(vf)) {
    Eigen::VectorXd drift = eval_field(vf, 0, x0);
    const Eigen::MatrixXd V = diffusion_matrix(vf, x0);
    Eigen::VectorXd state = x0;
    for (std::size_t k = 0; k < coarse_cells; ++k) {
      const std::size_t fine = (k + 1) * m;
      Eigen::VectorXd db_total(vf.d);
      for (int j = 0; j < vf.d; ++j)
        db_total(j) = driver.values(j, static_cast<Eigen::Index>(fine)) -
                      driver.values(j, static_cast<Eigen::Index>(k * m));
      state += drift * (sol.grid.points[k + 1] - sol.grid.points[k]) + V * db_total;
      check_state(state, fine);
      sol.X.row(static_cast<Eigen::Index>(k + 1)) = state.transpose();
    }
    return sol;
  }

  Eigen::VectorXd x = x0, x_next(vf.n), db(vf.d);
  Eigen::MatrixXd mult(vf.n, vf.n), cell_mult(vf.n, vf.n);
  for (std::size_t k = 0; k < coarse_cells; ++k) {
    if (with_jacobian) mult = I;
    for (std::size_t sub = 0; sub < m; ++sub) {
      const std::size_t cell = k * m + sub;
      const double dt = driver.grid.dt(cell);
      for (int j = 0; j < vf.d; ++j)
        db(j) = driver.values(j, static_cast<Eigen::Index>(cell + 1)) -
                driver.values(j, static_cast<Eigen::Index>(cell));
      if (scheme.kind == SchemeKind::wong_zakai_fine) {
        rk4_linear_driver_step(vf, x, dt, db / dt, x_next,
                               with_jacobian ? &cell_mult : nullptr);
      } else {
        taylor_step(vf, scheme.kind, x, dt, db, x_next, with_jacobian ? &cell_mult : nullptr);
      }
      check_state(x_next, cell + 1);
      x = x_next;
      if (with_jacobian) mult = cell_mult * mult;
    }
    sol.X.row(static_cast<Eigen::Index>(k + 1)) = x.transpose();
    if (with_jacobian) {
      sol.J[k + 1] = mult * sol.J[k];
      sol.Jinv[k + 1] = sol.Jinv[k] * mult.partialPivLu().solve(I);
    }
  }
  return sol;
}

}  // namespace detail

/// Integrate the driven equation along a sampled fBm path.  For
/// wong_zakai_fine the driver must be sampled on the m-times finer grid; the
/// solution is reported on the coarse grid.
inline SolutionPath solve(const VectorFieldSystem& vf, const FbmPath& driver,
                          const Eigen::VectorXd& x0, SolverScheme scheme) {
  return detail::integrate(vf, driver, x0, scheme, false);
}

/// Same as solve() but jointly propagating J and J^{-1}.
inline SolutionPath solve_with_jacobian(const VectorFieldSystem& vf, const FbmPath& driver,
                                        const Eigen::VectorXd& x0, SolverScheme scheme) {
  return detail::integrate(vf, driver, x0, scheme, true);
}

/// Integrate the ODE driven by a smooth tabulated path (4th-order stepping
/// along the piecewise-linear interpolation).
inline SolutionPath solve_ode_driver(const VectorFieldSystem& vf, const TimeGrid& grid,
                                     const Eigen::MatrixXd& driver, const Eigen::VectorXd& x0) {
  if (driver.rows() != vf.d || driver.cols() != static_cast<Eigen::Index>(grid.points.size()))
    throw DomainError("driver tabulation shape mismatch");
  FbmPath as_path{HurstParam(0.5), grid, driver, 0, SampleMethod::cholesky, {}};
  return detail::integrate(vf, as_path, x0, SolverScheme::euler(), false);
}

/// Skeleton ODE: drive with Rh = sum_k coeffs(i,k) h_{k+1} built from the KL
/// basis tabulation (coeffs is d x order).
inline SolutionPath solve_skeleton(const VectorFieldSystem& vf, const Eigen::MatrixXd& coeffs,
                                   const KlBasis& basis, const Eigen::VectorXd& x0) {
  if (coeffs.rows() != vf.d || coeffs.cols() > basis.order)
    throw DomainError("skeleton coefficients must be d x (<= basis order)");
  const auto np = static_cast<Eigen::Index>(basis.quad_grid.points.size());
  Eigen::MatrixXd driver = Eigen::MatrixXd::Zero(vf.d, np);
  for (int c = 0; c < vf.d; ++c)
    for (Eigen::Index k = 0; k < coeffs.cols(); ++k)
      driver.row(c) += coeffs(c, k) * basis.h_funcs.row(static_cast<Eigen::Index>(k));
  SolutionPath sol = detail::integrate(
      vf, FbmPath{basis.hurst, basis.quad_grid, driver, 0, SampleMethod::volterra, {}}, x0,
      SolverScheme{SchemeKind::wong_zakai_fine, 1}, false);
  return sol;
}

}  // namespace fbmlab
