#pragma once

#include <array>
#include <cmath>

#include "fbmlab/core.hpp"

namespace fbmlab {

// Volterra kernel K(t,s) writing fBm as B_t = int_0^t K(t,s) dW_s:
//
//   H > 1/2:  K(t,s) = c_H s^{1/2-H} int_s^t (u-s)^{H-3/2} u^{H-1/2} du
//   H < 1/2:  K(t,s) = c_{H,1} (s/t)^{1/2-H}(t-s)^{H-1/2}
//                      + c_{H,2} s^{1/2-H} int_s^t (u-s)^{H-1/2} u^{H-3/2} du
//   H = 1/2:  K(t,s) = 1 on {s < t}.
//
// The multiplicative constants are pinned by the reconstruction property
// int_0^{s^t} K(t,r)K(s,r) dr = R(s,t); the resulting values are
//   c_H     = sqrt( H(2H-1) / Beta(2-2H, H-1/2) )           (H > 1/2)
//   c_{H,1} = sqrt( 2H / ((1-2H) Beta(1-2H, H+1/2)) )       (H < 1/2)
//   c_{H,2} = (1/2 - H) c_{H,1}
// and the covariance identity is asserted in the test suite.

struct KernelConstants {
  double front = 0.0;     // c_H (H>1/2) or c_{H,1} (H<1/2)
  double integral = 0.0;  // coefficient of the integral term
  double dt_factor = 0.0; // d/dt K(t,s) = dt_factor * s^{1/2-H} t^{H-1/2} (t-s)^{H-3/2}
};

inline KernelConstants kernel_constants(const HurstParam& hurst) {
  const double H = hurst.value();
  KernelConstants k;
  if (hurst.is_brownian()) return k;
  if (H > 0.5) {
    const double c = std::sqrt(H * (2.0 * H - 1.0) / std::beta(2.0 - 2.0 * H, H - 0.5));
    k.front = 0.0;
    k.integral = c;
    k.dt_factor = c;
  } else {
    const double c1 = std::sqrt(2.0 * H / ((1.0 - 2.0 * H) * std::beta(1.0 - 2.0 * H, H + 0.5)));
    k.front = c1;
    k.integral = (0.5 - H) * c1;
    k.dt_factor = (H - 0.5) * c1;  // negative: K decreases in t for H < 1/2
  }
  return k;
}

namespace detail {

// Composite Gauss-Legendre (16-point panels) on [0, w1] after the power
// substitution that removes the endpoint singularity at u = s.
inline double gauss16(double a, double b, const auto& f) {
  static constexpr std::array<double, 8> x = {
      0.0950125098376374, 0.2816035507792589, 0.4580167776572274, 0.6178762444026438,
      0.7554044083550030, 0.8656312023878318, 0.9445750230732326, 0.9894009349916499};
  static constexpr std::array<double, 8> w = {
      0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
      0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double acc = 0.0;
  for (int i = 0; i < 8; ++i)
    acc += w[i] * (f(mid + half * x[i]) + f(mid - half * x[i]));
  return acc * half;
}

inline double panelled_gauss(double a, double b, int panels, const auto& f) {
  double acc = 0.0;
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) acc += gauss16(a + p * h, a + (p + 1) * h, f);
  return acc;
}

}  // namespace detail

/// Volterra kernel K(t,s), 0 < s < t.  Diverges like (t-s)^{H-1/2} as s -> t-
/// for H < 1/2 and vanishes at the same rate for H > 1/2.
inline double volterra_kernel(const HurstParam& hurst, double t, double s) {
  if (!(s > 0.0) || !(s < t)) throw DomainError("volterra_kernel requires 0 < s < t");
  if (hurst.is_brownian()) return 1.0;
  const double H = hurst.value();
  const KernelConstants kc = kernel_constants(hurst);
  if (H > 0.5) {
    // w = (u-s)^{H-1/2} flattens the (u-s)^{H-3/2} singularity exactly.
    const double beta = H - 0.5;
    const double w1 = std::pow(t - s, beta);
    const double integral =
        (1.0 / beta) * detail::panelled_gauss(0.0, w1, 8, [&](double w) {
          return std::pow(s + std::pow(w, 1.0 / beta), beta);
        });
    return kc.integral * std::pow(s, 0.5 - H) * integral;
  }
  // H < 1/2: explicit term plus compensating integral, w = (u-s)^{H+1/2}.
  const double expo = H + 0.5;
  const double w1 = std::pow(t - s, expo);
  const double integral =
      (1.0 / expo) * detail::panelled_gauss(0.0, w1, 8, [&](double w) {
        return std::pow(s + std::pow(w, 1.0 / expo), H - 1.5);
      });
  return kc.front * std::pow(s / t, 0.5 - H) * std::pow(t - s, H - 0.5) +
         kc.integral * std::pow(s, 0.5 - H) * integral;
}

/// d/dt K(t,s); same closed form for both regimes, zero at H = 1/2.
inline double volterra_kernel_dt(const HurstParam& hurst, double t, double s) {
  if (!(s > 0.0) || !(s < t)) throw DomainError("volterra_kernel_dt requires 0 < s < t");
  if (hurst.is_brownian()) return 0.0;
  const double H = hurst.value();
  const KernelConstants kc = kernel_constants(hurst);
  return kc.dt_factor * std::pow(s, 0.5 - H) * std::pow(t, H - 0.5) * std::pow(t - s, H - 1.5);
}

/// Exact primitive of the power factor: int_a^b (r - t)^{H-3/2} dr with t <= a < b.
/// Used for the cell containing the singularity of d/dr K(r,t); only valid
/// for H > 1/2 when a == t.
inline double power_cell_integral(const HurstParam& hurst, double t, double a, double b) {
  const double e = hurst.value() - 0.5;
  if (a <= t) {
    if (!(e > 0.0)) throw DomainError("singular cell integral diverges for H <= 1/2");
    return std::pow(b - t, e) / e;
  }
  return (std::pow(b - t, e) - std::pow(a - t, e)) / e;
}

/// Tempered variant int_a^b (r - t)^{H-1/2} dr, finite for all H in (0,1).
inline double tempered_cell_integral(const HurstParam& hurst, double t, double a, double b) {
  const double e = hurst.value() + 0.5;
  return (std::pow(b - t, e) - std::pow(a - t, e)) / e;
}

}  // namespace fbmlab
