#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fbmlab {

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown by solvers when the state leaves the admissible region.
struct BlowUpError : std::runtime_error {
  std::size_t step;
  BlowUpError(std::size_t step_, const std::string& what_)
      : std::runtime_error(what_), step(step_) {}
};

/// Regularity regime of the driving noise implied by the Hurst parameter.
enum class Regime { rough, brownian, smooth };

inline const char* regime_name(Regime r) {
  switch (r) {
    case Regime::rough: return "rough (H < 1/2)";
    case Regime::brownian: return "brownian (H = 1/2)";
    case Regime::smooth: return "smooth (H > 1/2)";
  }
  return "?";
}

/// Hurst parameter, valid on (0,1).  Theory-facing code additionally calls
/// require_rough_path_regime() which enforces H > 1/4.
class HurstParam {
 public:
  explicit HurstParam(double value) : value_(value) {
    if (!(value > 0.0) || !(value < 1.0))
      throw DomainError("Hurst parameter must lie in (0,1), got " + std::to_string(value));
  }

  double value() const { return value_; }

  bool is_brownian() const { return std::abs(value_ - 0.5) < 1e-14; }

  Regime regime() const {
    if (is_brownian()) return Regime::brownian;
    return value_ < 0.5 ? Regime::rough : Regime::smooth;
  }

  void require_rough_path_regime() const {
    if (!(value_ > 0.25))
      throw DomainError("H must exceed 1/4, got " + std::to_string(value_));
  }

 private:
  double value_;
};

/// Discretization grid 0 = t_0 < t_1 < ... < t_N = T.
struct TimeGrid {
  std::vector<double> points;
  bool uniform = false;

  static TimeGrid regular(double horizon, std::size_t cells) {
    if (!(horizon > 0.0)) throw DomainError("horizon must be positive");
    if (cells == 0) throw DomainError("grid needs at least one cell");
    TimeGrid g;
    g.points.resize(cells + 1);
    for (std::size_t k = 0; k <= cells; ++k)
      g.points[k] = horizon * static_cast<double>(k) / static_cast<double>(cells);
    g.points.back() = horizon;
    g.uniform = true;
    return g;
  }

  static TimeGrid from_points(std::vector<double> pts) {
    TimeGrid g;
    g.points = std::move(pts);
    g.validate();
    const double dt0 = g.points[1] - g.points[0];
    g.uniform = true;
    for (std::size_t k = 0; k + 1 < g.points.size(); ++k) {
      const double dtk = g.points[k + 1] - g.points[k];
      if (std::abs(dtk - dt0) > 1e-12 * std::max(dt0, dtk)) {
        g.uniform = false;
        break;
      }
    }
    return g;
  }

  void validate() const {
    if (points.size() < 2) throw DomainError("grid needs at least two points");
    if (std::abs(points.front()) > 1e-15) throw DomainError("grid must start at 0");
    for (std::size_t k = 0; k + 1 < points.size(); ++k)
      if (!(points[k] < points[k + 1])) throw DomainError("grid points must increase strictly");
  }

  std::size_t cells() const { return points.size() - 1; }
  double horizon() const { return points.back(); }
  double dt(std::size_t cell) const { return points[cell + 1] - points[cell]; }
  double midpoint(std::size_t cell) const { return 0.5 * (points[cell] + points[cell + 1]); }

  /// Index of a grid point equal to t (within 1e-12 absolute), or throws.
  std::size_t index_of(double t) const {
    for (std::size_t k = 0; k < points.size(); ++k)
      if (std::abs(points[k] - t) < 1e-12) return k;
    throw DomainError("time " + std::to_string(t) + " is not a grid point");
  }
};

}  // namespace fbmlab
