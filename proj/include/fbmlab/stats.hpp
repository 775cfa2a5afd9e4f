#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "fbmlab/core.hpp"

namespace fbmlab {

/// Neumaier-compensated accumulator; reductions over fixed task order stay
/// bit-identical regardless of worker count.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double median_inplace(std::vector<double>& v) {
  if (v.empty()) throw DomainError("median of empty sample");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid - 1), v.end());
  return 0.5 * (hi + v[mid - 1]);
}

inline double median(std::vector<double> v) { return median_inplace(v); }

inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw DomainError("quantile of empty sample");
  q = std::clamp(q, 0.0, 1.0);
  const auto idx = static_cast<std::size_t>(q * static_cast<double>(v.size() - 1) + 0.5);
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(idx), v.end());
  return v[idx];
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
};

inline LinearFit linear_regression(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("regression needs >= 2 points");
  const double n = static_cast<double>(x.size());
  CompensatedSum sx, sy, sxx, sxy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx.add(x[i]);
    sy.add(y[i]);
    sxx.add(x[i] * x[i]);
    sxy.add(x[i] * y[i]);
  }
  const double mx = sx.value() / n, my = sy.value() / n;
  const double denom = sxx.value() - n * mx * mx;
  if (std::abs(denom) < 1e-300) throw DomainError("regression abscissae are degenerate");
  LinearFit fit;
  fit.slope = (sxy.value() - n * mx * my) / denom;
  fit.intercept = my - fit.slope * mx;
  CompensatedSum res;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.slope * x[i] - fit.intercept;
    res.add(r * r);
  }
  fit.residual_rms = std::sqrt(res.value() / n);
  return fit;
}

/// Median-of-batches slope: robust exponent fit for heavy-tailed Monte-Carlo
/// error.  `y_batches[b][i]` is the i-th ordinate in batch b.
struct BatchedSlope {
  double slope = 0.0;       // median over batches
  double spread = 0.0;      // max - min over batches
  std::vector<double> per_batch;
};

inline BatchedSlope batched_slope(const std::vector<double>& x,
                                  const std::vector<std::vector<double>>& y_batches) {
  BatchedSlope out;
  for (const auto& y : y_batches) out.per_batch.push_back(linear_regression(x, y).slope);
  std::vector<double> copy = out.per_batch;
  out.slope = median_inplace(copy);
  const auto [lo, hi] = std::minmax_element(out.per_batch.begin(), out.per_batch.end());
  out.spread = *hi - *lo;
  return out;
}

inline double binomial_stderr(double p_hat, std::size_t trials) {
  if (trials == 0) throw DomainError("binomial stderr needs trials > 0");
  return std::sqrt(std::max(p_hat * (1.0 - p_hat), 0.0) / static_cast<double>(trials));
}

/// One named exponent (or constant) check inside a BoundFit.
struct FitEntry {
  std::string name;
  double target = 0.0;
  double fitted = 0.0;
  double tolerance = 0.0;  // |fitted - target| <= tolerance passes
  bool pass = false;
};

/// Outcome of a Monte-Carlo regression against a paper inequality.
struct BoundFit {
  std::vector<FitEntry> exponents;
  std::map<std::string, double> diagnostics;
  bool pass = false;

  void add_entry(std::string name, double target, double fitted, double tolerance) {
    FitEntry e{std::move(name), target, fitted, tolerance,
               std::abs(fitted - target) <= tolerance};
    exponents.push_back(std::move(e));
  }
  void finalize() {
    pass = true;
    for (const auto& e : exponents) pass = pass && e.pass;
  }
};

inline double standard_normal_pdf(double z) {
  return 0.3989422804014326779 * std::exp(-0.5 * z * z);
}

inline double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z * 0.70710678118654752); }

}  // namespace fbmlab
