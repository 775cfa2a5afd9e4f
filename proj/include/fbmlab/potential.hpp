#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "fbmlab/core.hpp"

namespace fbmlab {

/// alpha-dimensional Newtonian kernel K_alpha(r).
inline double newton_kernel(double alpha, double r, double n0) {
  if (alpha < 0.0) return 1.0;
  if (r <= 0.0) return std::numeric_limits<double>::infinity();
  if (alpha == 0.0) return std::log(n0 / r);
  return std::pow(r, -alpha);
}

/// Compact target set: box / ball / point / finite union.
struct CompactSet {
  enum class Kind { point, ball, box, set_union };
  Kind kind = Kind::point;
  Eigen::VectorXd a;  // point location, ball center, or box lower corner
  Eigen::VectorXd b;  // box upper corner
  double radius = 0.0;
  std::vector<CompactSet> parts;

  static CompactSet point(Eigen::VectorXd x) {
    CompactSet s;
    s.kind = Kind::point;
    s.a = std::move(x);
    return s;
  }
  static CompactSet ball(Eigen::VectorXd center, double radius) {
    if (!(radius >= 0.0)) throw DomainError("ball radius must be nonnegative");
    CompactSet s;
    s.kind = Kind::ball;
    s.a = std::move(center);
    s.radius = radius;
    return s;
  }
  static CompactSet box(Eigen::VectorXd lo, Eigen::VectorXd hi) {
    if (lo.size() != hi.size()) throw DomainError("box corners need equal dimensions");
    for (Eigen::Index i = 0; i < lo.size(); ++i)
      if (lo(i) > hi(i)) throw DomainError("box corners must be ordered");
    CompactSet s;
    s.kind = Kind::box;
    s.a = std::move(lo);
    s.b = std::move(hi);
    return s;
  }
  static CompactSet make_union(std::vector<CompactSet> parts) {
    if (parts.empty()) throw DomainError("union needs at least one part");
    const int d = parts.front().dim();
    for (const auto& p : parts)
      if (p.dim() != d) throw DomainError("union parts need equal dimensions");
    CompactSet s;
    s.kind = Kind::set_union;
    s.parts = std::move(parts);
    return s;
  }

  int dim() const {
    if (kind == Kind::set_union) return parts.front().dim();
    return static_cast<int>(a.size());
  }

  void bounding_box(Eigen::VectorXd& lo, Eigen::VectorXd& hi) const {
    switch (kind) {
      case Kind::point: lo = a; hi = a; return;
      case Kind::ball:
        lo = a.array() - radius;
        hi = a.array() + radius;
        return;
      case Kind::box: lo = a; hi = b; return;
      case Kind::set_union: {
        parts.front().bounding_box(lo, hi);
        for (std::size_t i = 1; i < parts.size(); ++i) {
          Eigen::VectorXd l2, h2;
          parts[i].bounding_box(l2, h2);
          lo = lo.cwiseMin(l2);
          hi = hi.cwiseMax(h2);
        }
        return;
      }
    }
  }

  double diameter() const {
    Eigen::VectorXd lo, hi;
    bounding_box(lo, hi);
    return (hi - lo).norm();
  }

  bool contains(const Eigen::VectorXd& x, double tol = 1e-12) const {
    switch (kind) {
      case Kind::point: return (x - a).norm() <= tol;
      case Kind::ball: return (x - a).norm() <= radius + tol;
      case Kind::box:
        for (Eigen::Index i = 0; i < a.size(); ++i)
          if (x(i) < a(i) - tol || x(i) > b(i) + tol) return false;
        return true;
      case Kind::set_union:
        for (const auto& p : parts)
          if (p.contains(x, tol)) return true;
        return false;
    }
    return false;
  }

  /// Euclidean distance from x to the set.
  double distance(const Eigen::VectorXd& x) const {
    switch (kind) {
      case Kind::point: return (x - a).norm();
      case Kind::ball: return std::max(0.0, (x - a).norm() - radius);
      case Kind::box: {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < a.size(); ++i) {
          const double d = std::max({a(i) - x(i), x(i) - b(i), 0.0});
          acc += d * d;
        }
        return std::sqrt(acc);
      }
      case Kind::set_union: {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& p : parts) best = std::min(best, p.distance(x));
        return best;
      }
    }
    return 0.0;
  }
};

namespace detail {

inline void skip_spaces(const std::string& s, std::size_t& i) {
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
}

inline std::vector<double> parse_numbers(const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  double v;
  while (in >> v) out.push_back(v);
  if (!in.eof()) throw ConfigError("bad numeric list in set descriptor: '" + text + "'");
  return out;
}

inline Eigen::VectorXd to_vector(const std::vector<double>& v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) x(static_cast<Eigen::Index>(i)) = v[i];
  return x;
}

CompactSet parse_set_impl(const std::string& s, std::size_t& i);

/// splits "a | b | c" at top parenthesis level
inline std::vector<std::string> split_top_level(const std::string& body, char sep) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char c : body) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == sep && depth == 0) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline CompactSet parse_set_impl(const std::string& s, std::size_t& i) {
  skip_spaces(s, i);
  std::size_t name_start = i;
  while (i < s.size() && std::isalpha(static_cast<unsigned char>(s[i]))) ++i;
  const std::string name = s.substr(name_start, i - name_start);
  skip_spaces(s, i);
  if (i >= s.size() || s[i] != '(')
    throw ConfigError("set descriptor: expected '(' after '" + name + "'");
  int depth = 1;
  const std::size_t body_start = ++i;
  while (i < s.size() && depth > 0) {
    if (s[i] == '(') ++depth;
    if (s[i] == ')') --depth;
    ++i;
  }
  if (depth != 0) throw ConfigError("set descriptor: unbalanced parentheses");
  const std::string body = s.substr(body_start, i - 1 - body_start);

  if (name == "point") return CompactSet::point(to_vector(parse_numbers(body)));
  if (name == "ball") {
    const auto halves = split_top_level(body, ';');
    if (halves.size() != 2) throw ConfigError("ball(center; radius)");
    const auto r = parse_numbers(halves[1]);
    if (r.size() != 1) throw ConfigError("ball radius must be a single number");
    return CompactSet::ball(to_vector(parse_numbers(halves[0])), r[0]);
  }
  if (name == "box") {
    const auto halves = split_top_level(body, ';');
    if (halves.size() != 2) throw ConfigError("box(lo; hi)");
    return CompactSet::box(to_vector(parse_numbers(halves[0])),
                           to_vector(parse_numbers(halves[1])));
  }
  if (name == "union") {
    std::vector<CompactSet> parts;
    for (const auto& piece : split_top_level(body, '|')) {
      std::size_t j = 0;
      parts.push_back(parse_set_impl(piece, j));
    }
    return CompactSet::make_union(std::move(parts));
  }
  throw ConfigError("unknown set descriptor '" + name + "'");
}

}  // namespace detail

/// Textual descriptor: point(x...), ball(c...; r), box(lo...; hi...),
/// union(A | B | ...).
inline CompactSet parse_compact_set(const std::string& text) {
  std::size_t i = 0;
  CompactSet s = detail::parse_set_impl(text, i);
  detail::skip_spaces(text, i);
  if (i != text.size()) throw ConfigError("trailing characters in set descriptor");
  return s;
}

/// Probability weights on support points inside the set.
struct DiscreteMeasure {
  Eigen::MatrixXd support;  // k x n
  Eigen::VectorXd weights;

  void validate(const CompactSet* set = nullptr) const {
    if (support.rows() != weights.size()) throw DomainError("measure size mismatch");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
      if (weights(i) < 0.0) throw DomainError("measure weights must be nonnegative");
      sum += weights(i);
    }
    if (std::abs(sum - 1.0) > 1e-12) throw DomainError("measure weights must sum to 1");
    if (set)
      for (Eigen::Index i = 0; i < support.rows(); ++i)
        if (!set->contains(support.row(i).transpose(), 1e-9))
          throw DomainError("support point lies outside the set");
  }
};

struct EnergyValue {
  double total = 0.0;
  double off_diagonal = 0.0;
};

/// Mollified alpha-energy: Sum w_i w_j K_alpha(max(|x_i - x_j|, eps)).
/// The mollification is the discrete counterpart of smoothing the measure at
/// scale eps.
inline EnergyValue energy(const DiscreteMeasure& mu, double alpha, double n0,
                          double mollify_eps) {
  if (!(mollify_eps > 0.0)) throw DomainError("mollification radius must be positive");
  const auto k = mu.support.rows();
  EnergyValue e;
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) {
      const double r = (mu.support.row(i) - mu.support.row(j)).norm();
      const double v = mu.weights(i) * mu.weights(j) *
                       newton_kernel(alpha, std::max(r, mollify_eps), n0);
      e.total += v;
      if (i != j) e.off_diagonal += v;
    }
  return e;
}

/// Quasi-uniform mesh of the set with roughly `target` points; returns the
/// characteristic spacing alongside.
struct SetMesh {
  Eigen::MatrixXd points;
  double spacing = 0.0;
};

namespace detail {

inline void append_rows(std::vector<Eigen::VectorXd>& acc, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) acc.push_back(m.row(i).transpose());
}

inline SetMesh mesh_box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                        std::size_t target) {
  const int n = static_cast<int>(lo.size());
  int active = 0;
  for (int i = 0; i < n; ++i) active += hi(i) - lo(i) > 0.0 ? 1 : 0;
  const std::size_t per_dim = active == 0
      ? 1
      : std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(
            std::pow(static_cast<double>(target), 1.0 / active))));
  std::vector<std::size_t> counts(static_cast<std::size_t>(n), 1);
  for (int i = 0; i < n; ++i)
    if (hi(i) - lo(i) > 0.0) counts[static_cast<std::size_t>(i)] = per_dim;
  std::size_t total = 1;
  for (auto c : counts) total *= c;
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(total), n);
  std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
  double spacing = 0.0;
  for (int i = 0; i < n; ++i)
    if (counts[static_cast<std::size_t>(i)] > 1)
      spacing = std::max(spacing, (hi(i) - lo(i)) / static_cast<double>(counts[static_cast<std::size_t>(i)] - 1));
  for (std::size_t r = 0; r < total; ++r) {
    for (int i = 0; i < n; ++i) {
      const std::size_t c = counts[static_cast<std::size_t>(i)];
      pts(static_cast<Eigen::Index>(r), i) =
          c == 1 ? lo(i)
                 : lo(i) + (hi(i) - lo(i)) * static_cast<double>(idx[static_cast<std::size_t>(i)]) /
                       static_cast<double>(c - 1);
    }
    for (int i = 0; i < n; ++i) {
      if (++idx[static_cast<std::size_t>(i)] < counts[static_cast<std::size_t>(i)]) break;
      idx[static_cast<std::size_t>(i)] = 0;
    }
  }
  return {std::move(pts), spacing};
}

/// Fibonacci lattice on the sphere of given radius (n = 3).
inline Eigen::MatrixXd fibonacci_sphere(const Eigen::VectorXd& center, double radius,
                                        std::size_t count) {
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(count), 3);
  const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(count);
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = 2.0 * 3.14159265358979324 * static_cast<double>(i) / golden;
    pts(static_cast<Eigen::Index>(i), 0) = center(0) + radius * rho * std::cos(phi);
    pts(static_cast<Eigen::Index>(i), 1) = center(1) + radius * rho * std::sin(phi);
    pts(static_cast<Eigen::Index>(i), 2) = center(2) + radius * z;
  }
  return pts;
}

}  // namespace detail

inline SetMesh mesh_set(const CompactSet& set, std::size_t target) {
  const int n = set.dim();
  switch (set.kind) {
    case CompactSet::Kind::point: {
      Eigen::MatrixXd p(1, n);
      p.row(0) = set.a.transpose();
      return {std::move(p), 0.0};
    }
    case CompactSet::Kind::box: return detail::mesh_box(set.a, set.b, target);
    case CompactSet::Kind::ball: {
      if (set.radius == 0.0) return mesh_set(CompactSet::point(set.a), target);
      std::vector<Eigen::VectorXd> acc;
      double spacing = 0.0;
      if (n == 1) {
        const SetMesh inner = detail::mesh_box(set.a.array() - set.radius,
                                               set.a.array() + set.radius, target);
        return inner;
      }
      if (n == 2) {
        // boundary circle plus interior grid; equilibrium measures lean on
        // the boundary, so give it half the budget
        const std::size_t on_boundary = std::max<std::size_t>(8, target / 2);
        Eigen::MatrixXd ring(static_cast<Eigen::Index>(on_boundary), 2);
        for (std::size_t i = 0; i < on_boundary; ++i) {
          const double phi = 2.0 * 3.14159265358979324 * static_cast<double>(i) /
                             static_cast<double>(on_boundary);
          ring(static_cast<Eigen::Index>(i), 0) = set.a(0) + set.radius * std::cos(phi);
          ring(static_cast<Eigen::Index>(i), 1) = set.a(1) + set.radius * std::sin(phi);
        }
        detail::append_rows(acc, ring);
        spacing = 2.0 * 3.14159265358979324 * set.radius / static_cast<double>(on_boundary);
      } else if (n == 3) {
        const std::size_t on_boundary = std::max<std::size_t>(16, target / 2);
        detail::append_rows(acc, detail::fibonacci_sphere(set.a, set.radius, on_boundary));
        spacing = std::sqrt(4.0 * 3.14159265358979324 / static_cast<double>(on_boundary)) *
                  set.radius;
      } else {
        throw DomainError("ball meshes support n <= 3");
      }
      // interior Cartesian grid clipped to the ball
      const SetMesh boxm = detail::mesh_box(set.a.array() - set.radius,
                                            set.a.array() + set.radius, target);
      for (Eigen::Index i = 0; i < boxm.points.rows(); ++i) {
        const Eigen::VectorXd x = boxm.points.row(i).transpose();
        if ((x - set.a).norm() <= set.radius) acc.push_back(x);
      }
      spacing = std::max(spacing, boxm.spacing);
      Eigen::MatrixXd pts(static_cast<Eigen::Index>(acc.size()), n);
      for (std::size_t i = 0; i < acc.size(); ++i)
        pts.row(static_cast<Eigen::Index>(i)) = acc[i].transpose();
      return {std::move(pts), spacing};
    }
    case CompactSet::Kind::set_union: {
      std::vector<Eigen::VectorXd> acc;
      double spacing = 0.0;
      const std::size_t per_part = std::max<std::size_t>(2, target / set.parts.size());
      for (const auto& part : set.parts) {
        const SetMesh m = mesh_set(part, per_part);
        detail::append_rows(acc, m.points);
        spacing = std::max(spacing, m.spacing);
      }
      Eigen::MatrixXd pts(static_cast<Eigen::Index>(acc.size()), n);
      for (std::size_t i = 0; i < acc.size(); ++i)
        pts.row(static_cast<Eigen::Index>(i)) = acc[i].transpose();
      return {std::move(pts), spacing};
    }
  }
  throw DomainError("corrupt set descriptor");
}

/// Greedy grid cover by balls of radius eps: an upper estimate of the
/// alpha-Hausdorff content at scale eps.  Returns +infinity for alpha < 0 by
/// the convention of the hitting bounds.
inline double hausdorff_content(const CompactSet& set, double alpha, double eps) {
  if (!(eps > 0.0)) throw DomainError("cover scale must be positive");
  if (alpha < 0.0) return std::numeric_limits<double>::infinity();
  const int n = set.dim();
  Eigen::VectorXd lo, hi;
  set.bounding_box(lo, hi);
  // cell spacing such that a ball of radius eps covers a full cell
  const double delta = 2.0 * eps / std::sqrt(static_cast<double>(n));
  std::vector<std::size_t> counts(static_cast<std::size_t>(n));
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) {
    counts[static_cast<std::size_t>(i)] =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((hi(i) - lo(i)) / delta)));
    total *= counts[static_cast<std::size_t>(i)];
  }
  if (total > 50'000'000) throw DomainError("cover grid too large at this scale");

  // count cells whose closed cell-box meets the set (distance from the cell
  // center to the set below half the cell diagonal)
  const double half_diag = 0.5 * delta * std::sqrt(static_cast<double>(n));
  std::size_t used = 0;
  std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
  Eigen::VectorXd center(n);
  for (std::size_t c = 0; c < total; ++c) {
    for (int i = 0; i < n; ++i)
      center(i) = lo(i) + delta * (static_cast<double>(idx[static_cast<std::size_t>(i)]) + 0.5);
    if (set.distance(center) <= half_diag + 1e-15) ++used;
    for (int i = 0; i < n; ++i) {
      if (++idx[static_cast<std::size_t>(i)] < counts[static_cast<std::size_t>(i)]) break;
      idx[static_cast<std::size_t>(i)] = 0;
    }
  }
  return static_cast<double>(used) * std::pow(2.0 * eps, alpha);
}

}  // namespace fbmlab
