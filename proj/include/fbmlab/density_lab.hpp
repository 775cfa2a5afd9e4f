#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "fbmlab/kde.hpp"
#include "fbmlab/malliavin.hpp"
#include "fbmlab/rde.hpp"

namespace fbmlab {

// Monte-Carlo density and tail estimation: sub-Gaussian upper bound of the
// density, strict positivity on probe boxes, and concentration of the
// supremum.  Exponent fits use median-of-batches regression to stay robust to
// heavy-tailed Monte-Carlo error.

struct McOptions {
  std::size_t paths = 100000;
  std::size_t steps = 512;
  std::uint64_t seed = 1;
  SampleMethod method = SampleMethod::circulant;
  SolverScheme scheme = SolverScheme::milstein2();
  unsigned workers = 0;
  int batches = 10;
  double tolerance_fraction = 0.15;
};

/// Marginals X_t for each requested t (values per path in rows).
inline std::vector<Eigen::MatrixXd> simulate_marginals(const VectorFieldSystem& vf,
                                                       const HurstParam& hurst,
                                                       const Eigen::VectorXd& x0,
                                                       const std::vector<double>& t_list,
                                                       const McOptions& opt) {
  const TimeGrid grid = TimeGrid::regular(t_list.back(), opt.steps);
  std::vector<std::size_t> idx;
  for (double t : t_list) idx.push_back(grid.index_of(t));
  FbmSampler sampler(hurst, grid, vf.d, opt.method);

  std::vector<Eigen::MatrixXd> out(t_list.size());
  for (auto& m : out) m.resize(static_cast<Eigen::Index>(opt.paths), vf.n);
  parallel_for(opt.paths, opt.workers, [&](std::size_t p) {
    const SolutionPath sol =
        solve(vf, sampler.sample(opt.seed, static_cast<std::uint64_t>(p)), x0, opt.scheme);
    for (std::size_t ti = 0; ti < idx.size(); ++ti)
      out[ti].row(static_cast<Eigen::Index>(p)) =
          sol.X.row(static_cast<Eigen::Index>(idx[ti]));
  });
  return out;
}

/// Running sup_{s<=t} |X_s - x0| recorded at each requested t.
inline Eigen::MatrixXd simulate_sup_deviation(const VectorFieldSystem& vf,
                                              const HurstParam& hurst,
                                              const Eigen::VectorXd& x0,
                                              const std::vector<double>& t_list,
                                              const McOptions& opt) {
  const TimeGrid grid = TimeGrid::regular(t_list.back(), opt.steps);
  std::vector<std::size_t> idx;
  for (double t : t_list) idx.push_back(grid.index_of(t));
  FbmSampler sampler(hurst, grid, vf.d, opt.method);

  Eigen::MatrixXd out(static_cast<Eigen::Index>(opt.paths),
                      static_cast<Eigen::Index>(t_list.size()));
  parallel_for(opt.paths, opt.workers, [&](std::size_t p) {
    const SolutionPath sol =
        solve(vf, sampler.sample(opt.seed, static_cast<std::uint64_t>(p)), x0, opt.scheme);
    double running = 0.0;
    std::size_t next = 0;
    for (std::size_t k = 0; k <= grid.cells() && next < idx.size(); ++k) {
      running = std::max(
          running, (sol.X.row(static_cast<Eigen::Index>(k)).transpose() - x0).norm());
      if (k == idx[next]) {
        out(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(next)) = running;
        ++next;
      }
    }
  });
  return out;
}

namespace detail {

/// log-log slope of the tail shape: fits log(log pmax - log p(y)) against
/// log |y - x0| over admissible evaluation points.
inline std::optional<double> tail_exponent_from_kde(const DensityEstimate& est, double x0,
                                                    double spread) {
  double pmax = 0.0;
  for (double v : est.density) pmax = std::max(pmax, v);
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < est.density.size(); ++i) {
    const double r = std::abs(est.eval_points(static_cast<Eigen::Index>(i), 0) - x0);
    const double p = est.density[i];
    // deep tail only: variance-mixture marginals keep an apparent exponent
    // near 1 through the mid-tail and only approach the theoretical one
    // beyond ~2.5 standard deviations; the 3x floor guard drops points
    // contaminated by sample-range truncation at the KDE edge
    if (p <= 3.0 * est.noise_floor || p >= 0.3 * pmax || r < 2.5 * spread) continue;
    lx.push_back(std::log(r));
    ly.push_back(std::log(std::log(pmax) - std::log(p)));
  }
  if (lx.size() < 4) return std::nullopt;
  return linear_regression(lx, ly).slope;
}

}  // namespace detail

struct DensityBoundArtifacts {
  std::vector<DensityEstimate> estimates;  // one per t
  double c1 = 0.0;                         // verified prefactor constant
  double c2 = 0.0;                         // verified exponential constant
  double q_used = 0.0;                     // exponent used in the global fit
  bool envelope_holds = false;
  double c2_gaussian_alt = 0.0;            // H < 1/2 only: alternative fit with q = 2
};

/// Three fits against p_t(y) <= c1 t^{-nH} exp(-|y-x|^q / (c2 t^{2H})), q = min(2H+1, 2):
/// (a) spatial tail exponent, (b) time prefactor slope, (c) global envelope
/// constants verified at every KDE point above the noise floor.
inline BoundFit verify_density_upper_bound(const VectorFieldSystem& vf, const HurstParam& hurst,
                                           const Eigen::VectorXd& x0,
                                           const std::vector<double>& t_list,
                                           const McOptions& opt,
                                           DensityBoundArtifacts* artifacts = nullptr) {
  if (vf.n != 1) throw DomainError("density bound verification is implemented for n = 1");
  const double H = hurst.value();
  const double q_theory = std::min(2.0 * H + 1.0, 2.0);
  const auto marginals = simulate_marginals(vf, hurst, x0, t_list, opt);

  std::vector<DensityEstimate> estimates;
  std::vector<double> log_t, log_pmax;
  std::vector<std::vector<double>> q_batches(static_cast<std::size_t>(opt.batches));
  // global envelope data: (u, v) with u = |y-x0|^q / t^{2H}, v = log p + nH log t
  std::vector<double> env_u, env_v, env_p, env_t;

  for (std::size_t ti = 0; ti < t_list.size(); ++ti) {
    const Eigen::MatrixXd& samples = marginals[ti];
    const double mean = samples.col(0).mean();
    const double sd = std::sqrt((samples.col(0).array() - mean).square().mean());
    const Eigen::MatrixXd grid = eval_grid_1d(x0(0) - 5.0 * sd, x0(0) + 5.0 * sd, 101);
    DensityEstimate est = estimate_density(samples, grid, std::nullopt, opt.workers);
    est.t = t_list[ti];

    double pmax = 0.0;
    for (double v : est.density) pmax = std::max(pmax, v);
    log_t.push_back(std::log(t_list[ti]));
    log_pmax.push_back(std::log(std::max(pmax, 1e-300)));

    for (std::size_t i = 0; i < est.density.size(); ++i) {
      const double p = est.density[i];
      if (p <= est.noise_floor) continue;
      const double r = std::abs(est.eval_points(static_cast<Eigen::Index>(i), 0) - x0(0));
      env_u.push_back(std::pow(r, q_theory) / std::pow(t_list[ti], 2.0 * H));
      env_v.push_back(std::log(p) + 1.0 * H * std::log(t_list[ti]));
      env_p.push_back(p);
      env_t.push_back(t_list[ti]);
    }

    // batch tail exponents (sample split by residue class)
    const auto rows = samples.rows();
    for (int b = 0; b < opt.batches; ++b) {
      std::vector<Eigen::Index> pick;
      for (Eigen::Index r = b; r < rows; r += opt.batches) pick.push_back(r);
      Eigen::MatrixXd sub(static_cast<Eigen::Index>(pick.size()), 1);
      for (std::size_t r = 0; r < pick.size(); ++r) sub(static_cast<Eigen::Index>(r), 0) = samples(pick[r], 0);
      const DensityEstimate be = estimate_density(sub, grid, std::nullopt, opt.workers);
      if (const auto slope = detail::tail_exponent_from_kde(be, x0(0), sd))
        q_batches[static_cast<std::size_t>(b)].push_back(*slope);
    }
    estimates.push_back(std::move(est));
  }

  BoundFit fit;
  // (a) spatial exponent: median over all batch/t fits; batches with too few
  // points above their own (higher) noise floor fall back to the full sample
  std::vector<double> q_all;
  for (const auto& b : q_batches) q_all.insert(q_all.end(), b.begin(), b.end());
  if (q_all.empty()) {
    for (std::size_t ti = 0; ti < estimates.size(); ++ti) {
      const double mean = marginals[ti].col(0).mean();
      const double sd = std::sqrt((marginals[ti].col(0).array() - mean).square().mean());
      if (const auto slope = detail::tail_exponent_from_kde(estimates[ti], x0(0), sd))
        q_all.push_back(*slope);
    }
  }
  if (q_all.empty()) throw DomainError("no KDE points above the noise floor for the tail fit");
  const double q_hat = median(q_all);
  fit.add_entry("spatial_exponent", q_theory, q_hat, opt.tolerance_fraction * q_theory);

  // (b) prefactor slope vs -nH
  const double pref_slope = linear_regression(log_t, log_pmax).slope;
  fit.add_entry("time_prefactor_slope", -static_cast<double>(vf.n) * H, pref_slope,
                opt.tolerance_fraction * static_cast<double>(vf.n) * H);

  // (c) global envelope: LS fit of v = log c1 - u/c2, then inflate c1 until
  // the bound holds at every admissible point
  const LinearFit env = linear_regression(env_u, env_v);
  const bool env_ok = env.slope < 0.0;
  double c2 = env_ok ? -1.0 / env.slope : 0.0;
  double c1 = 0.0;
  if (env_ok) {
    for (std::size_t i = 0; i < env_u.size(); ++i)
      c1 = std::max(c1, env_p[i] * std::pow(env_t[i], H) * std::exp(env_u[i] / c2));
  }
  fit.add_entry("envelope_admissible", 1.0, env_ok ? 1.0 : 0.0, 0.5);
  fit.diagnostics["c1"] = c1;
  fit.diagnostics["c2"] = c2;
  fit.diagnostics["q_spread"] = [&] {
    if (q_all.size() < 2) return 0.0;
    const auto [lo, hi] = std::minmax_element(q_all.begin(), q_all.end());
    return *hi - *lo;
  }();
  fit.finalize();

  if (artifacts) {
    artifacts->estimates = std::move(estimates);
    artifacts->c1 = c1;
    artifacts->c2 = c2;
    artifacts->q_used = q_theory;
    artifacts->envelope_holds = env_ok;
    if (H < 0.5) {
      // alternative fit with the Gaussian exponent q = 2 for the open question
      std::vector<double> u2;
      for (std::size_t i = 0; i < env_p.size(); ++i) {
        const double r = std::pow(env_u[i] * std::pow(env_t[i], 2.0 * H), 1.0 / q_theory);
        u2.push_back(r * r / std::pow(env_t[i], 2.0 * H));
      }
      const LinearFit alt = linear_regression(u2, env_v);
      artifacts->c2_gaussian_alt = alt.slope < 0.0 ? -1.0 / alt.slope : 0.0;
    }
  }
  return fit;
}

struct ProbeResult {
  Eigen::VectorXd y;
  double density = 0.0;
  double stderr_mc = 0.0;
  bool positive = false;
  double certificate_error = 0.0;  // |Phi(h)_t - y|
  Eigen::VectorXd h_coefficient;
};

struct PositivityReport {
  double t = 0.0;
  std::vector<ProbeResult> probes;
  bool all_positive = false;
  bool all_certified = false;
};

/// p-hat(y) - 3 stderr > 0 at every probe, plus a reachability certificate
/// from the skeleton ODE (an h with Phi(h)_t near y).
inline PositivityReport verify_positivity(const VectorFieldSystem& vf, const HurstParam& hurst,
                                          const Eigen::VectorXd& x0, double t,
                                          const Eigen::MatrixXd& probes, const McOptions& opt,
                                          const KlBasis& basis,
                                          double certificate_tolerance = 1e-6) {
  const auto marginals = simulate_marginals(vf, hurst, x0, {t}, opt);
  const DensityEstimate est = estimate_density(marginals[0], probes, std::nullopt, opt.workers);

  PositivityReport report;
  report.t = t;
  report.all_positive = true;
  report.all_certified = true;
  const std::size_t t_idx = basis.quad_grid.index_of(t);

  for (Eigen::Index pi = 0; pi < probes.rows(); ++pi) {
    ProbeResult r;
    r.y = probes.row(pi).transpose();
    r.density = est.density[static_cast<std::size_t>(pi)];
    r.stderr_mc = est.stderrs[static_cast<std::size_t>(pi)];
    r.positive = r.density - 3.0 * r.stderr_mc > 0.0;

    if (vf.n == 1) {
      // shooting by bisection along h = c e_1 (monotone for elliptic 1-d)
      auto shoot = [&](double c) {
        Eigen::MatrixXd coeffs = Eigen::MatrixXd::Zero(vf.d, 1);
        coeffs(0, 0) = c;
        return solve_skeleton(vf, coeffs, basis, x0).X(static_cast<Eigen::Index>(t_idx), 0);
      };
      double lo = -1.0, hi = 1.0;
      const double target = r.y(0);
      for (int grow = 0; grow < 40 && shoot(lo) > target; ++grow) lo *= 2.0;
      for (int grow = 0; grow < 40 && shoot(hi) < target; ++grow) hi *= 2.0;
      if (shoot(lo) <= target && shoot(hi) >= target) {
        for (int it = 0; it < 80; ++it) {
          const double mid = 0.5 * (lo + hi);
          (shoot(mid) < target ? lo : hi) = mid;
        }
        const double c = 0.5 * (lo + hi);
        r.certificate_error = std::abs(shoot(c) - target);
        r.h_coefficient = Eigen::VectorXd::Constant(1, c);
      } else {
        r.certificate_error = std::numeric_limits<double>::infinity();
      }
    } else {
      // damped Broyden iteration on the leading coefficient per component
      Eigen::MatrixXd coeffs = Eigen::MatrixXd::Zero(vf.d, 1);
      const double h1t = basis.h_funcs(0, static_cast<Eigen::Index>(t_idx));
      Eigen::VectorXd c = Eigen::VectorXd::Zero(vf.d);
      if (std::abs(h1t) > 1e-12 && vf.d >= vf.n)
        for (int i = 0; i < vf.n; ++i) c(i) = (r.y(i) - x0(i)) / h1t;
      double err = std::numeric_limits<double>::infinity();
      for (int it = 0; it < 60; ++it) {
        for (int i = 0; i < vf.d; ++i) coeffs(i, 0) = c(i);
        const Eigen::VectorXd phi =
            solve_skeleton(vf, coeffs, basis, x0).X.row(static_cast<Eigen::Index>(t_idx)).transpose();
        const Eigen::VectorXd residual = phi - r.y;
        err = residual.norm();
        if (err < certificate_tolerance) break;
        for (int i = 0; i < std::min(vf.n, vf.d); ++i) c(i) -= 0.5 * residual(i) / h1t;
      }
      r.certificate_error = err;
      r.h_coefficient = c;
    }
    report.all_positive = report.all_positive && r.positive;
    report.all_certified =
        report.all_certified && r.certificate_error <= certificate_tolerance;
    report.probes.push_back(std::move(r));
  }
  return report;
}

struct ConcentrationArtifacts {
  std::vector<double> xi_used;
  std::vector<double> t_used;
  Eigen::MatrixXd tail_probability;  // rows: t, cols: xi (NaN where dropped)
};

/// Tail fits for P(sup_{s<=t} |X_s - x0| >= xi): xi-exponent against
/// min(2H+1, 2) and t-scaling against -2H.  Cells with fewer than 50 exceedances
/// are dropped (grid shrink is recorded in the artifacts).
inline BoundFit verify_concentration(const VectorFieldSystem& vf, const HurstParam& hurst,
                                     const Eigen::VectorXd& x0, const std::vector<double>& t_list,
                                     const std::vector<double>& xi_grid, const McOptions& opt,
                                     ConcentrationArtifacts* artifacts = nullptr) {
  const double H = hurst.value();
  const double q_theory = std::min(2.0 * H + 1.0, 2.0);
  const Eigen::MatrixXd sup = simulate_sup_deviation(vf, hurst, x0, t_list, opt);
  const auto paths = sup.rows();

  Eigen::MatrixXd tail(static_cast<Eigen::Index>(t_list.size()),
                       static_cast<Eigen::Index>(xi_grid.size()));
  Eigen::MatrixXd counts = tail;
  for (std::size_t ti = 0; ti < t_list.size(); ++ti)
    for (std::size_t xi = 0; xi < xi_grid.size(); ++xi) {
      Eigen::Index c = 0;
      for (Eigen::Index p = 0; p < paths; ++p)
        c += sup(p, static_cast<Eigen::Index>(ti)) >= xi_grid[xi] ? 1 : 0;
      counts(static_cast<Eigen::Index>(ti), static_cast<Eigen::Index>(xi)) = static_cast<double>(c);
      tail(static_cast<Eigen::Index>(ti), static_cast<Eigen::Index>(xi)) =
          static_cast<double>(c) / static_cast<double>(paths);
    }

  const auto admissible = [&](std::size_t ti, std::size_t xi) {
    const double c = counts(static_cast<Eigen::Index>(ti), static_cast<Eigen::Index>(xi));
    const double p = tail(static_cast<Eigen::Index>(ti), static_cast<Eigen::Index>(xi));
    return c >= 50.0 && p <= 0.25;  // tail cells the sample resolves
  };

  BoundFit fit;
  // xi-exponent from the joint (t, xi) profile of the paper's own form
  // -log P = xi^q / (c t^{2H}) + b: tying the windows across t pins q far
  // more stably than any single-t fit
  {
    std::vector<double> cell_xi, cell_t, cell_y;
    for (std::size_t ti = 0; ti < t_list.size(); ++ti)
      for (std::size_t xi = 0; xi < xi_grid.size(); ++xi) {
        if (!admissible(ti, xi)) continue;
        cell_xi.push_back(xi_grid[xi]);
        cell_t.push_back(t_list[ti]);
        cell_y.push_back(-std::log(
            tail(static_cast<Eigen::Index>(ti), static_cast<Eigen::Index>(xi))));
      }
    if (cell_y.size() < 6) throw DomainError("too few admissible tail cells; shrink the xi grid");
    const auto joint_profile = [&](const std::vector<double>& xs, const std::vector<double>& ts,
                                   const std::vector<double>& ys) -> std::optional<double> {
      double best_q = 0.0, best_rms = std::numeric_limits<double>::infinity();
      std::vector<double> basis(xs.size());
      for (double q = 1.0; q <= 3.5 + 1e-9; q += 0.01) {
        for (std::size_t i = 0; i < xs.size(); ++i)
          basis[i] = std::pow(xs[i], q) / std::pow(ts[i], 2.0 * H);
        const LinearFit f = linear_regression(basis, ys);
        if (f.slope <= 0.0) continue;
        if (f.residual_rms < best_rms) {
          best_rms = f.residual_rms;
          best_q = q;
        }
      }
      if (best_q == 0.0) return std::nullopt;
      return best_q;
    };
    const auto pooled = joint_profile(cell_xi, cell_t, cell_y);
    if (!pooled) throw DomainError("tail profile fit is degenerate");
    fit.add_entry("xi_exponent", q_theory, *pooled, opt.tolerance_fraction * q_theory);

    // per-batch refits as a stability diagnostic (each batch re-derives its
    // own admissible cells from its own counts)
    std::vector<double> batch_fits;
    for (int b = 0; b < opt.batches; ++b) {
      std::vector<double> bx, bt, by;
      for (std::size_t ti = 0; ti < t_list.size(); ++ti)
        for (std::size_t xi = 0; xi < xi_grid.size(); ++xi) {
          Eigen::Index c = 0, tot = 0;
          for (Eigen::Index p = b; p < paths; p += opt.batches) {
            ++tot;
            c += sup(p, static_cast<Eigen::Index>(ti)) >= xi_grid[xi] ? 1 : 0;
          }
          const double pb = static_cast<double>(c) / static_cast<double>(tot);
          if (c < 50 || pb > 0.25) continue;
          bx.push_back(xi_grid[xi]);
          bt.push_back(t_list[ti]);
          by.push_back(-std::log(pb));
        }
      if (bx.size() >= 6)
        if (const auto qb = joint_profile(bx, bt, by)) batch_fits.push_back(*qb);
    }
    if (batch_fits.size() >= 2) {
      const auto [lo, hi] = std::minmax_element(batch_fits.begin(), batch_fits.end());
      fit.diagnostics["xi_exponent_batch_spread"] = *hi - *lo;
    }
  }
  // t-scaling through the tail quantile: for a self-similar sup the p*-level
  // quantile scales exactly like t^{2H/q}, so the implied slope of
  // log(-log P) in log t is -q_hat * slope(log quantile); this avoids the
  // bulk bias of fitting -log P directly at a fixed xi
  {
    const double p_star = std::max(0.05, 100.0 / static_cast<double>(paths));
    std::vector<double> log_t;
    for (double t : t_list) log_t.push_back(std::log(t));
    std::vector<std::vector<double>> q_batches(static_cast<std::size_t>(opt.batches));
    for (int b = 0; b < opt.batches; ++b) {
      bool ok = true;
      std::vector<double> lq;
      for (std::size_t ti = 0; ti < t_list.size() && ok; ++ti) {
        std::vector<double> vals;
        for (Eigen::Index p = b; p < paths; p += opt.batches)
          vals.push_back(sup(p, static_cast<Eigen::Index>(ti)));
        const double q = quantile(vals, 1.0 - p_star);
        ok = q > 0.0;
        lq.push_back(std::log(std::max(q, 1e-300)));
      }
      if (ok) q_batches[static_cast<std::size_t>(b)] = std::move(lq);
    }
    std::vector<std::vector<double>> usable;
    for (auto& q : q_batches)
      if (!q.empty()) usable.push_back(std::move(q));
    if (usable.empty()) throw DomainError("tail quantiles degenerate for the scaling fit");
    const BatchedSlope qs = batched_slope(log_t, usable);
    const double q_hat = fit.exponents[0].fitted;
    const double slope = -q_hat * qs.slope;
    fit.add_entry("t_scaling_slope", -2.0 * H, slope, opt.tolerance_fraction * 2.0 * H);
    fit.diagnostics["quantile_level"] = p_star;
    fit.diagnostics["quantile_slope_spread"] = qs.spread;
  }
  fit.finalize();

  if (artifacts) {
    artifacts->xi_used = xi_grid;
    artifacts->t_used = t_list;
    artifacts->tail_probability = tail;
  }
  return fit;
}

}  // namespace fbmlab
