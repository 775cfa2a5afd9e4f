#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "fbmlab/expr.hpp"
#include "fbmlab/core.hpp"

namespace fbmlab {

struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
};

/// The d+1 vector fields of the driven equation: fields[0] is the drift V_0,
/// fields[1..d] the diffusion columns V_1..V_d, each with n components.
struct VectorFieldSystem {
  int n = 0;
  int d = 0;
  std::vector<std::vector<Expr>> fields;
  std::optional<double> ellipticity_lambda;
  std::vector<std::string> warnings;

  static VectorFieldSystem from_expressions(int n, int d,
                                            const std::vector<std::vector<std::string>>& texts) {
    if (static_cast<int>(texts.size()) != d + 1)
      throw DomainError("need d+1 vector fields (V0..Vd)");
    VectorFieldSystem vf;
    vf.n = n;
    vf.d = d;
    for (const auto& field : texts) {
      if (static_cast<int>(field.size()) != n)
        throw DomainError("each vector field needs n component expressions");
      std::vector<Expr> parsed;
      for (const auto& text : field) {
        Expr e = parse_field(text);
        if (e.max_variable() >= n)
          throw DomainError("expression '" + text + "' references x" +
                            std::to_string(e.max_variable() + 1) + " beyond the state dimension");
        parsed.push_back(std::move(e));
      }
      vf.fields.push_back(std::move(parsed));
    }
    vf.flag_unbounded();
    return vf;
  }

  /// Heuristic boundedness check in the spirit of C_b^infty: every variable
  /// occurrence must sit under sin/cos/tanh and no division appears.  Systems
  /// failing it still run; the flag records the caveat.
  void flag_unbounded() {
    auto bounded = [](const Expr& e, const auto& self) -> bool {
      using K = Expr::Kind;
      switch (e.kind) {
        case K::constant: return true;
        case K::variable: return false;
        case K::sin:
        case K::cos:
        case K::tanh: return true;
        case K::div: return false;
        case K::pow:
          return e.exponent >= 0 && (e.exponent == 0 || self(e.child[0], self));
        default: break;
      }
      for (const auto& c : e.child)
        if (!self(c, self)) return false;
      return true;
    };
    for (std::size_t j = 0; j < fields.size(); ++j)
      for (const auto& e : fields[j])
        if (!bounded(e, bounded)) {
          warnings.push_back("V" + std::to_string(j) +
                             " is not certifiably bounded; moment hypotheses may fail");
          return;
        }
  }
};

/// V_j evaluated at x.
inline Eigen::VectorXd eval_field(const VectorFieldSystem& vf, int j, const Eigen::VectorXd& x) {
  if (j < 0 || j > vf.d) throw DomainError("field index out of range");
  std::vector<double> vars(static_cast<std::size_t>(vf.n));
  for (int i = 0; i < vf.n; ++i) vars[static_cast<std::size_t>(i)] = x(i);
  Eigen::VectorXd out(vf.n);
  for (int i = 0; i < vf.n; ++i) {
    const double v = eval_expr(vf.fields[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)], vars);
    if (!std::isfinite(v)) throw EvalError("vector field evaluated to a non-finite value");
    out(i) = v;
  }
  return out;
}

/// Jacobian DV_j(x) by forward-mode duals, one pass per input coordinate.
inline Eigen::MatrixXd jacobian_field(const VectorFieldSystem& vf, int j,
                                      const Eigen::VectorXd& x) {
  if (j < 0 || j > vf.d) throw DomainError("field index out of range");
  Eigen::MatrixXd out(vf.n, vf.n);
  std::vector<Dual> vars(static_cast<std::size_t>(vf.n));
  for (int i = 0; i < vf.n; ++i) vars[static_cast<std::size_t>(i)] = Dual(x(i), 0.0);
  for (int col = 0; col < vf.n; ++col) {
    vars[static_cast<std::size_t>(col)].d = 1.0;
    for (int row = 0; row < vf.n; ++row) {
      const Dual r =
          eval_expr(vf.fields[static_cast<std::size_t>(j)][static_cast<std::size_t>(row)], vars);
      if (!std::isfinite(r.v) || !std::isfinite(r.d))
        throw EvalError("vector field derivative evaluated to a non-finite value");
      out(row, col) = r.d;
    }
    vars[static_cast<std::size_t>(col)].d = 0.0;
  }
  return out;
}

/// Diffusion matrix V(x) = [V_1(x) ... V_d(x)] (n x d).
inline Eigen::MatrixXd diffusion_matrix(const VectorFieldSystem& vf, const Eigen::VectorXd& x) {
  Eigen::MatrixXd V(vf.n, vf.d);
  for (int j = 1; j <= vf.d; ++j) V.col(j - 1) = eval_field(vf, j, x);
  return V;
}

namespace detail {

inline double halton(std::uint64_t index, int base) {
  double f = 1.0, r = 0.0;
  std::uint64_t i = index + 1;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % static_cast<std::uint64_t>(base));
    i /= static_cast<std::uint64_t>(base);
  }
  return r;
}

}  // namespace detail

/// min over probe points of lambda_min(V V*): a lower-confidence sampling
/// proxy for the ellipticity constant, not a certificate.  Deterministic
/// (Halton points plus box corners and center).
inline double estimate_ellipticity(const VectorFieldSystem& vf, const Box& box, int samples) {
  if (vf.d < vf.n) throw DomainError("ellipticity needs d >= n");
  static constexpr int primes[] = {2, 3, 5, 7, 11, 13, 17, 19};
  if (vf.n > 8) throw DomainError("ellipticity probe supports n <= 8");
  double min_eig = std::numeric_limits<double>::infinity();
  auto probe = [&](const Eigen::VectorXd& x) {
    const Eigen::MatrixXd V = diffusion_matrix(vf, x);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(V * V.transpose());
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
  };
  probe(0.5 * (box.lo + box.hi));
  for (int corner = 0; corner < (1 << vf.n); ++corner) {
    Eigen::VectorXd x(vf.n);
    for (int i = 0; i < vf.n; ++i) x(i) = (corner >> i) & 1 ? box.hi(i) : box.lo(i);
    probe(x);
  }
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd x(vf.n);
    for (int i = 0; i < vf.n; ++i)
      x(i) = box.lo(i) +
             (box.hi(i) - box.lo(i)) * detail::halton(static_cast<std::uint64_t>(s), primes[i]);
    probe(x);
  }
  return std::max(min_eig, 0.0);
}

}  // namespace fbmlab
