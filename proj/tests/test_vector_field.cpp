#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "fbmlab/rng.hpp"
#include "fbmlab/vector_field.hpp"

using namespace fbmlab;

namespace {

VectorFieldSystem elliptic_sin_1d() {
  return VectorFieldSystem::from_expressions(1, 1, {{"0"}, {"1 + 0.5*sin(x1)"}});
}

}  // namespace

TEST_CASE("field evaluation", "[vector_field]") {
  const auto vf = elliptic_sin_1d();
  Eigen::VectorXd x(1);
  x << 0.0;
  CHECK(eval_field(vf, 1, x)(0) == Catch::Approx(1.0));  // sin 0 = 0
  x << 1.3;
  CHECK(eval_field(vf, 1, x)(0) == Catch::Approx(1.0 + 0.5 * std::sin(1.3)));
  CHECK(eval_field(vf, 0, x)(0) == 0.0);
  CHECK_THROWS_AS(eval_field(vf, 2, x), DomainError);

  // constant fields give the same output everywhere
  const auto constant = VectorFieldSystem::from_expressions(2, 2, {{"0", "0"}, {"1", "0"}, {"0", "1"}});
  Eigen::VectorXd a(2), b(2);
  a << 0.0, 0.0;
  b << 3.0, -1.0;
  CHECK(eval_field(constant, 1, a) == eval_field(constant, 1, b));
}

TEST_CASE("dimension validation", "[vector_field]") {
  CHECK_THROWS_AS(VectorFieldSystem::from_expressions(1, 1, {{"x2"}, {"1"}}), DomainError);
  CHECK_THROWS_AS(VectorFieldSystem::from_expressions(1, 1, {{"1"}}), DomainError);
  CHECK_THROWS_AS(VectorFieldSystem::from_expressions(2, 1, {{"1"}, {"1", "0"}}), DomainError);
}

TEST_CASE("jacobian by duals", "[vector_field]") {
  // constant field: zero matrix
  const auto constant = VectorFieldSystem::from_expressions(2, 2, {{"0", "0"}, {"1", "2"}, {"0", "1"}});
  Eigen::VectorXd x(2);
  x << 0.4, -0.7;
  CHECK(jacobian_field(constant, 1, x).cwiseAbs().maxCoeff() == 0.0);

  // d sin / dx at 0 = 1
  const auto vf = VectorFieldSystem::from_expressions(1, 1, {{"0"}, {"sin(x1)"}});
  Eigen::VectorXd z(1);
  z << 0.0;
  CHECK(jacobian_field(vf, 1, z)(0, 0) == Catch::Approx(1.0));
}

TEST_CASE("jacobian matches central finite differences on a catalog", "[vector_field]") {
  const std::vector<VectorFieldSystem> catalog = {
      elliptic_sin_1d(),
      VectorFieldSystem::from_expressions(2, 2,
                                          {{"0", "0"},
                                           {"1 + 0.5*sin(x1)", "0.25*cos(x2)"},
                                           {"tanh(x1*x2)", "1 + 0.25*cos(x1)"}}),
      VectorFieldSystem::from_expressions(2, 2,
                                          {{"x2", "-x1"},
                                           {"exp(-x1*x1)", "x1*x2"},
                                           {"pow(x1, 2) - x2", "1"}}),
  };
  RandomStream s(55, 3);
  std::uint64_t ctr = 0;
  for (const auto& vf : catalog) {
    for (int pt = 0; pt < 100; ++pt) {
      Eigen::VectorXd x(vf.n);
      for (int i = 0; i < vf.n; ++i) x(i) = s.uniform(ctr++) * 2.0 - 1.0;
      for (int j = 0; j <= vf.d; ++j) {
        const Eigen::MatrixXd J = jacobian_field(vf, j, x);
        for (int col = 0; col < vf.n; ++col) {
          Eigen::VectorXd xp = x, xm = x;
          const double h = 1e-6;
          xp(col) += h;
          xm(col) -= h;
          const Eigen::VectorXd fd = (eval_field(vf, j, xp) - eval_field(vf, j, xm)) / (2 * h);
          for (int row = 0; row < vf.n; ++row) {
            const double scale = std::max(1.0, std::abs(J(row, col)));
            CHECK(std::abs(J(row, col) - fd(row)) / scale < 1e-6);
          }
        }
      }
    }
  }
}

TEST_CASE("ellipticity probe", "[vector_field]") {
  // identity frame: exactly 1
  const auto id2 = VectorFieldSystem::from_expressions(2, 2, {{"0", "0"}, {"1", "0"}, {"0", "1"}});
  Box box{Eigen::VectorXd::Constant(2, -1.0), Eigen::VectorXd::Constant(2, 1.0)};
  CHECK(estimate_ellipticity(id2, box, 64) == Catch::Approx(1.0));

  // diag(1 + 0.5 sin x1): min over sin range is (1 - 0.5)^2 = 0.25
  const auto vf = elliptic_sin_1d();
  Box wide{Eigen::VectorXd::Constant(1, -6.3), Eigen::VectorXd::Constant(1, 6.3)};
  CHECK(estimate_ellipticity(vf, wide, 4000) == Catch::Approx(0.25).epsilon(1e-4));

  // degenerate system
  const auto zero = VectorFieldSystem::from_expressions(1, 1, {{"0"}, {"0"}});
  CHECK(estimate_ellipticity(zero, wide, 16) == 0.0);

  CHECK_THROWS_AS(
      estimate_ellipticity(VectorFieldSystem::from_expressions(2, 1, {{"0", "0"}, {"1", "1"}}),
                           box, 8),
      DomainError);
}

TEST_CASE("boundedness flag", "[vector_field]") {
  CHECK(elliptic_sin_1d().warnings.empty());
  const auto geometric = VectorFieldSystem::from_expressions(1, 1, {{"0"}, {"0.4*x1"}});
  CHECK_FALSE(geometric.warnings.empty());
}
