#include <catch2/catch_amalgamated.hpp>

#include "fbmlab/covariance.hpp"

using namespace fbmlab;

TEST_CASE("covariance closed form", "[covariance]") {
  // H = 1/2 degenerates to min(s,t)
  CHECK(covariance(HurstParam(0.5), 0.3, 0.7) == Catch::Approx(0.3).epsilon(1e-14));
  // R(1,1) = 1 for every H
  for (double H : {0.3, 0.5, 0.75, 0.9})
    CHECK(covariance(HurstParam(H), 1.0, 1.0) == Catch::Approx(1.0).epsilon(1e-14));
  // independently evaluated value of (t^{2H}+s^{2H}-|t-s|^{2H})/2 at H=0.75:
  // cross terms cancel and the value is exactly 1/2
  CHECK(covariance(HurstParam(0.75), 0.5, 1.0) == Catch::Approx(0.5).epsilon(1e-14));
  CHECK_THROWS_AS(covariance(HurstParam(0.5), -0.1, 0.5), DomainError);
}

TEST_CASE("hurst parameter validation and regimes", "[covariance]") {
  CHECK_THROWS_AS(HurstParam(0.0), DomainError);
  CHECK_THROWS_AS(HurstParam(1.0), DomainError);
  CHECK(HurstParam(0.3).regime() == Regime::rough);
  CHECK(HurstParam(0.5).regime() == Regime::brownian);
  CHECK(HurstParam(0.7).regime() == Regime::smooth);
  CHECK_THROWS_AS(HurstParam(0.2).require_rough_path_regime(), DomainError);
  CHECK_NOTHROW(HurstParam(0.26).require_rough_path_regime());
}

TEST_CASE("covariance matrix is symmetric PSD with t^{2H} diagonal", "[covariance]") {
  for (double H : {0.3, 0.7}) {
    const HurstParam h(H);
    const TimeGrid g = TimeGrid::regular(1.0, 16);
    const Eigen::MatrixXd R = covariance_matrix(h, g);
    CHECK((R - R.transpose()).cwiseAbs().maxCoeff() == 0.0);
    for (Eigen::Index i = 0; i < R.rows(); ++i)
      CHECK(R(i, i) == Catch::Approx(std::pow(g.points[static_cast<std::size_t>(i)], 2 * H))
                           .margin(1e-14));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R);
    CHECK(es.eigenvalues().minCoeff() >= -1e-9 * R.trace());
  }
}

TEST_CASE("uniform-grid increment covariance matches the generic path", "[covariance]") {
  const HurstParam h(0.35);
  const TimeGrid gu = TimeGrid::regular(2.0, 12);
  TimeGrid gn = gu;
  gn.uniform = false;  // force the generic evaluation
  const Eigen::MatrixXd A = increment_covariance_matrix(h, gu);
  const Eigen::MatrixXd B = increment_covariance_matrix(h, gn);
  CHECK((A - B).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("time grid construction", "[covariance]") {
  const TimeGrid g = TimeGrid::regular(1.0, 8);
  CHECK(g.uniform);
  CHECK(g.cells() == 8);
  CHECK(g.horizon() == 1.0);
  CHECK(g.index_of(0.5) == 4);
  CHECK_THROWS_AS(g.index_of(0.51), DomainError);
  CHECK_THROWS_AS(TimeGrid::from_points({0.0, 0.5, 0.5, 1.0}), DomainError);
  CHECK_THROWS_AS(TimeGrid::from_points({0.1, 0.5, 1.0}), DomainError);
  CHECK_FALSE(TimeGrid::from_points({0.0, 0.5, 1.0, 1.25}).uniform);
}
