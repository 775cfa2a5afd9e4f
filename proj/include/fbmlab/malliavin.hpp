#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "fbmlab/cameron_martin.hpp"
#include "fbmlab/rde.hpp"
#include "fbmlab/stats.hpp"

namespace fbmlab {

// Discrete Malliavin derivatives D_s X_t = J_t J_s^{-1} V(X_s) and the reduced
// matrix C_t: the Gram matrix, in the Hilbert space H restricted to [0,t], of
// the rows of u -> J_u^{-1} V(X_u).  Under ellipticity, lambda_min(C_t) scales
// like t^{2H}, which is what the scaling fit estimates.

/// n x d matrix with columns J_{s,t} V_j(X_s).
inline Eigen::MatrixXd malliavin_derivative(const SolutionPath& sol, const VectorFieldSystem& vf,
                                            std::size_t s_index, std::size_t t_index) {
  if (!sol.has_jacobian()) throw DomainError("solution lacks the Jacobian flow");
  if (s_index > t_index) throw DomainError("malliavin derivative needs s <= t");
  const Eigen::VectorXd xs = sol.X.row(static_cast<Eigen::Index>(s_index)).transpose();
  return sol.J[t_index] * sol.Jinv[s_index] * diffusion_matrix(vf, xs);
}

struct MalliavinMatrix {
  double t = 0.0;
  Eigen::MatrixXd C;        // PSD-projected (eigenvalues clipped at 0)
  double lambda_min = 0.0;  // smallest eigenvalue of the raw assembly
};

/// Assemble C_t from a solution with Jacobians.  H > 1/2 uses the weighted
/// double-integral cell rule; H <= 1/2 goes through K* and the L^2 pairing
/// on the truncated sub-grid.
inline MalliavinMatrix reduced_malliavin_matrix(const SolutionPath& sol,
                                                const VectorFieldSystem& vf,
                                                const HurstParam& hurst, std::size_t t_index) {
  if (!sol.has_jacobian()) throw DomainError("solution lacks the Jacobian flow");
  if (t_index < 1 || t_index > sol.grid.cells()) throw DomainError("t index out of range");
  const int n = vf.n, d = vf.d;

  // sub-grid [0, t] and grid-point tabulation of g(u) = J_u^{-1} V(X_u)
  TimeGrid sub;
  sub.points.assign(sol.grid.points.begin(),
                    sol.grid.points.begin() + static_cast<std::ptrdiff_t>(t_index + 1));
  sub.uniform = sol.grid.uniform;
  const auto cells = static_cast<Eigen::Index>(t_index);

  std::vector<Eigen::MatrixXd> rows(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a)
    rows[static_cast<std::size_t>(a)].resize(cells + 1, d);
  for (std::size_t u = 0; u <= t_index; ++u) {
    const Eigen::VectorXd xu = sol.X.row(static_cast<Eigen::Index>(u)).transpose();
    const Eigen::MatrixXd g = sol.Jinv[u] * diffusion_matrix(vf, xu);
    for (int a = 0; a < n; ++a)
      rows[static_cast<std::size_t>(a)].row(static_cast<Eigen::Index>(u)) = g.row(a);
  }
  // midpoint tabulations
  std::vector<Eigen::MatrixXd> mids(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a)
    mids[static_cast<std::size_t>(a)] =
        0.5 * (rows[static_cast<std::size_t>(a)].topRows(cells) +
               rows[static_cast<std::size_t>(a)].bottomRows(cells));

  Eigen::MatrixXd C(n, n);
  if (hurst.value() > 0.5 && sub.uniform) {
    // Toeplitz fast path: C_ab = tr(F_a^T G F_b) with G the fGn covariance
    std::vector<double> gamma(t_index);
    for (std::size_t k = 0; k < t_index; ++k) gamma[k] = fgn_autocovariance(hurst, sub.dt(0), k);
    std::vector<Eigen::MatrixXd> weighted(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) {
      Eigen::MatrixXd w = Eigen::MatrixXd::Zero(cells, d);
      for (Eigen::Index i = 0; i < cells; ++i)
        for (Eigen::Index j = 0; j < cells; ++j)
          w.row(i) += gamma[static_cast<std::size_t>(std::abs(i - j))] *
                      mids[static_cast<std::size_t>(a)].row(j);
      weighted[static_cast<std::size_t>(a)] = std::move(w);
    }
    for (int a = 0; a < n; ++a)
      for (int b = 0; b <= a; ++b) {
        const double v = (mids[static_cast<std::size_t>(b)]
                              .cwiseProduct(weighted[static_cast<std::size_t>(a)]))
                             .sum();
        C(a, b) = v;
        C(b, a) = v;
      }
  } else {
    for (int a = 0; a < n; ++a)
      for (int b = 0; b <= a; ++b) {
        const double v = h_inner_product_midpoint(hurst, sub, mids[static_cast<std::size_t>(a)],
                                                  mids[static_cast<std::size_t>(b)]);
        C(a, b) = v;
        C(b, a) = v;
      }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
  MalliavinMatrix out;
  out.t = sub.horizon();
  out.lambda_min = es.eigenvalues().minCoeff();
  out.C = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
          es.eigenvectors().transpose();
  return out;
}

/// Regression of log median lambda_min(C_t) on log t across a dyadic t grid;
/// the elliptic theory predicts slope 2H.
struct ScalingFitOptions {
  std::vector<double> t_grid = {1.0 / 64, 1.0 / 32, 1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2, 1.0};
  int paths = 1000;
  std::size_t steps = 256;
  std::uint64_t seed = 1;
  SampleMethod method = SampleMethod::circulant;
  SolverScheme scheme = SolverScheme::milstein2();
  int batches = 10;
  double tolerance_fraction = 0.15;
};

inline BoundFit malliavin_scaling_fit(const VectorFieldSystem& vf, const HurstParam& hurst,
                                      const Eigen::VectorXd& x0, const ScalingFitOptions& opt,
                                      std::vector<double>* median_lambda_out = nullptr) {
  if (opt.t_grid.size() < 3) throw DomainError("scaling fit needs at least 3 time points");
  const TimeGrid grid = TimeGrid::regular(1.0, opt.steps);
  std::vector<std::size_t> t_idx;
  for (double t : opt.t_grid) t_idx.push_back(grid.index_of(t));

  FbmSampler sampler(hurst, grid, vf.d, opt.method);
  // per path, per t: lambda_min
  std::vector<std::vector<double>> lam(opt.t_grid.size());
  for (int p = 0; p < opt.paths; ++p) {
    const FbmPath driver = sampler.sample(opt.seed, static_cast<std::uint64_t>(p));
    const SolutionPath sol = solve_with_jacobian(vf, driver, x0, opt.scheme);
    for (std::size_t ti = 0; ti < t_idx.size(); ++ti)
      lam[ti].push_back(reduced_malliavin_matrix(sol, vf, hurst, t_idx[ti]).lambda_min);
  }

  std::vector<double> log_t;
  for (double t : opt.t_grid) log_t.push_back(std::log(t));

  // batch medians for the robust fit
  const int B = opt.batches;
  std::vector<std::vector<double>> y_batches(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) {
    for (std::size_t ti = 0; ti < t_idx.size(); ++ti) {
      std::vector<double> chunk;
      for (int p = b; p < opt.paths; p += B) chunk.push_back(lam[ti][static_cast<std::size_t>(p)]);
      y_batches[static_cast<std::size_t>(b)].push_back(std::log(std::max(median_inplace(chunk), 1e-300)));
    }
  }
  const BatchedSlope fit = batched_slope(log_t, y_batches);

  if (median_lambda_out) {
    median_lambda_out->clear();
    for (std::size_t ti = 0; ti < t_idx.size(); ++ti)
      median_lambda_out->push_back(median(lam[ti]));
  }

  BoundFit out;
  const double target = 2.0 * hurst.value();
  out.add_entry("lambda_min_slope", target, fit.slope, opt.tolerance_fraction * target);
  out.diagnostics["batch_spread"] = fit.spread;
  out.finalize();
  return out;
}

// ---------------------------------------------------------------------------
// Scale-invariant interpolation inequalities: for continuous f and t in (0,1]
//
//   H > 1/2,  gamma > H-1/2:
//     c1 t^{2H} min|f|^4 / (||f||_inf^2 + ||f||_gamma^2)
//        <= || f 1_{[0,t]} ||_H^2 <= c2 t^{2H} ||f||_inf^2
//   H <= 1/2, gamma > 1/2-H:
//     c1 t^{2H} min|f|^2 <= || f 1_{[0,t]} ||_H^2
//        <= c2 t^{2H} (||f||_gamma^2 + ||f||_inf^2)
//
// The verifier sweeps t, reports the implied constants, and flags a violation
// when the implied band degenerates (a symptom of a quadrature bug, since the
// inequalities themselves are theorems).

struct InterpolationFunctionReport {
  std::string name;
  bool vacuous_lower = false;  // min |f| = 0
  double c1_min = 0.0, c1_max = 0.0;
  double c2_min = 0.0, c2_max = 0.0;
  bool violation = false;
};

struct InterpolationReport {
  double hurst = 0.0;
  double gamma = 0.0;
  std::vector<InterpolationFunctionReport> functions;
  bool any_violation = false;
};

struct NamedFunction {
  std::string name;
  std::function<double(double)> f;
};

/// Default corpus: constants, oscillations, polynomial ramps and a function
/// vanishing at one point.
inline std::vector<NamedFunction> interpolation_corpus() {
  return {
      {"one", [](double) { return 1.0; }},
      {"two", [](double) { return 2.0; }},
      {"sin1", [](double t) { return 1.0 + 0.5 * std::sin(2.0 * 3.14159265358979324 * t); }},
      {"sin3", [](double t) { return 1.0 + 0.5 * std::sin(6.0 * 3.14159265358979324 * t); }},
      {"ramp", [](double t) { return 0.5 + 0.5 * t; }},
      {"poly2", [](double t) { return 1.0 - 0.5 * t * t; }},
      {"vanish0", [](double t) { return t; }},
  };
}

inline InterpolationReport verify_interpolation(const HurstParam& hurst, double gamma,
                                                const std::vector<NamedFunction>& corpus,
                                                const std::vector<double>& t_grid,
                                                std::size_t quad_cells = 512) {
  const double H = hurst.value();
  if (H > 0.5 && !(gamma > H - 0.5))
    throw DomainError("H > 1/2 requires gamma > H - 1/2");
  if (H <= 0.5 && !(gamma > 0.5 - H))
    throw DomainError("H <= 1/2 requires gamma > 1/2 - H");

  const TimeGrid grid = TimeGrid::regular(1.0, quad_cells);
  InterpolationReport report;
  report.hurst = H;
  report.gamma = gamma;

  for (const auto& nf : corpus) {
    // norms on [0,1] from a dense tabulation
    const std::size_t m = 512;
    std::vector<double> sample(m + 1);
    for (std::size_t i = 0; i <= m; ++i) sample[i] = nf.f(static_cast<double>(i) / m);
    double sup = 0.0, min_abs = std::numeric_limits<double>::infinity(), holder = 0.0;
    for (std::size_t i = 0; i <= m; ++i) {
      sup = std::max(sup, std::abs(sample[i]));
      min_abs = std::min(min_abs, std::abs(sample[i]));
    }
    for (std::size_t i = 0; i <= m; ++i)
      for (std::size_t j = i + 1; j <= m; ++j)
        holder = std::max(holder, std::abs(sample[j] - sample[i]) /
                                      std::pow(static_cast<double>(j - i) / m, gamma));

    InterpolationFunctionReport fr;
    fr.name = nf.name;
    fr.vacuous_lower = min_abs < 1e-12;
    fr.c1_min = std::numeric_limits<double>::infinity();
    fr.c2_min = std::numeric_limits<double>::infinity();

    for (double t : t_grid) {
      const std::size_t cut = grid.index_of(t);
      TimeGrid sub;
      sub.points.assign(grid.points.begin(), grid.points.begin() + static_cast<std::ptrdiff_t>(cut + 1));
      sub.uniform = true;
      Eigen::MatrixXd fm(static_cast<Eigen::Index>(cut), 1);
      for (std::size_t j = 0; j < cut; ++j)
        fm(static_cast<Eigen::Index>(j), 0) = nf.f(sub.midpoint(j));
      const double norm2 = h_inner_product_midpoint(hurst, sub, fm, fm);
      const double t2h = std::pow(t, 2.0 * H);

      double lower_env, upper_env;
      if (H > 0.5) {
        lower_env = t2h * std::pow(min_abs, 4.0) / (sup * sup + holder * holder);
        upper_env = t2h * sup * sup;
      } else {
        lower_env = t2h * min_abs * min_abs;
        upper_env = t2h * (holder * holder + sup * sup);
      }
      if (!fr.vacuous_lower) {
        const double c1 = norm2 / lower_env;
        fr.c1_min = std::min(fr.c1_min, c1);
        fr.c1_max = std::max(fr.c1_max, c1);
      }
      const double c2 = norm2 / upper_env;
      fr.c2_min = std::min(fr.c2_min, c2);
      fr.c2_max = std::max(fr.c2_max, c2);
    }

    if (fr.vacuous_lower) {
      fr.c1_min = 0.0;
      fr.c1_max = 0.0;
    }
    // a theorem-level violation = the implied constants degenerate or blow
    // up across the sweep; the band-stability check needs min|f| > 0 (for
    // functions vanishing at a point the upper envelope is legitimately
    // loose at small t)
    auto bad_band = [](double lo, double hi) {
      return !(lo > 0.0) || !std::isfinite(hi) || hi / lo > 10.0;
    };
    fr.violation = !std::isfinite(fr.c2_max) || !(fr.c2_max > 0.0);
    if (!fr.vacuous_lower)
      fr.violation = fr.violation || bad_band(fr.c1_min, fr.c1_max) ||
                     bad_band(fr.c2_min, fr.c2_max);
    report.any_violation = report.any_violation || fr.violation;
    report.functions.push_back(std::move(fr));
  }
  return report;
}

}  // namespace fbmlab
