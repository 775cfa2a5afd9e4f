#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "fbmlab/cameron_martin.hpp"

using namespace fbmlab;

namespace {

// indicator of [0, t_cut] tabulated at cell midpoints
std::vector<double> indicator_mid(const TimeGrid& g, double t_cut) {
  std::vector<double> f(g.cells());
  for (std::size_t j = 0; j < g.cells(); ++j) f[j] = g.midpoint(j) < t_cut ? 1.0 : 0.0;
  return f;
}

double l2_dot(const TimeGrid& g, const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t j = 0; j < g.cells(); ++j) acc += g.dt(j) * a[j] * b[j];
  return acc;
}

Eigen::MatrixXd column(const std::vector<double>& v) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
  return m;
}

}  // namespace

TEST_CASE("kstar is the identity at H=1/2", "[cameron_martin]") {
  const TimeGrid g = TimeGrid::regular(1.0, 32);
  std::vector<double> f(g.points.size());
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = std::sin(3.0 * g.points[k]) + 0.2;
  CHECK(kstar_apply(HurstParam(0.5), g, f) == f);
}

TEST_CASE("kstar maps indicators to kernel columns", "[cameron_martin]") {
  for (double H : {0.7, 0.35}) {
    const HurstParam h(H);
    const TimeGrid g = TimeGrid::regular(1.0, 256);
    const std::size_t cut = 192;
    const double t_cut = g.points[cut];
    const auto out = kstar_midpoint(h, g, indicator_mid(g, t_cut));
    // compare away from the singular cell at the cut
    for (std::size_t j = 8; j + 8 < cut; j += 16) {
      const double expected = volterra_kernel(h, t_cut, g.midpoint(j));
      CHECK(out[j] == Catch::Approx(expected).epsilon(0.02));
    }
    for (std::size_t j = cut + 1; j < g.cells(); j += 16) CHECK(std::abs(out[j]) < 0.02);
  }
}

TEST_CASE("kstar L2 pairing reproduces t^{2H}", "[cameron_martin]") {
  // <K* 1_{[0,t]}, K* 1_{[0,t]}>_{L^2} = R(t,t) within 1% at N = 2048
  for (double H : {0.7, 0.3}) {
    const HurstParam h(H);
    const TimeGrid g = TimeGrid::regular(1.0, 2048);
    for (double t : {0.5, 1.0}) {
      const auto kf = kstar_midpoint(h, g, indicator_mid(g, t));
      CHECK(l2_dot(g, kf, kf) == Catch::Approx(std::pow(t, 2 * H)).epsilon(0.01));
    }
  }
}

TEST_CASE("h inner product of indicators equals the covariance", "[cameron_martin]") {
  const TimeGrid g = TimeGrid::regular(1.0, 1024);
  for (double H : {0.3, 0.5, 0.7}) {
    const HurstParam h(H);
    const double tol = H < 0.5 ? 0.01 : 1e-3;
    for (auto [s, t] : {std::pair{0.25, 0.75}, std::pair{0.5, 0.5}, std::pair{0.5, 1.0}}) {
      const double got = h_inner_product_midpoint(h, g, column(indicator_mid(g, s)),
                                                  column(indicator_mid(g, t)));
      const double expected = covariance(h, s, t);
      CHECK(got == Catch::Approx(expected).margin(tol * std::max(1.0, expected)));
    }
  }
}

TEST_CASE("h inner product: norm identities and orthogonality", "[cameron_martin]") {
  const HurstParam h(0.7);
  const TimeGrid g = TimeGrid::regular(1.0, 1024);
  // ||1_{[0,t]}||_H^2 = t^{1.4} within 1e-3 at N = 1024 (exact for the cell rule)
  const double t = 0.6;
  const double norm2 = h_inner_product_midpoint(h, g, column(indicator_mid(g, t)),
                                                column(indicator_mid(g, t)));
  CHECK(norm2 == Catch::Approx(std::pow(t, 1.4)).margin(1e-3));

  // disjoint components are orthogonal
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(1024, 2), q = Eigen::MatrixXd::Zero(1024, 2);
  f.col(0).setOnes();
  q.col(1).setOnes();
  CHECK(h_inner_product_midpoint(h, g, f, q) == 0.0);

  // constant e_1 on [0,1] has unit norm = R(1,1)
  Eigen::MatrixXd e1 = Eigen::MatrixXd::Zero(1024, 2);
  e1.col(0).setOnes();
  CHECK(h_inner_product_midpoint(h, g, e1, e1) == Catch::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("grid-point tabulations average onto cells", "[cameron_martin]") {
  const HurstParam h(0.7);
  const TimeGrid g = TimeGrid::regular(1.0, 512);
  std::vector<double> ones(g.points.size(), 1.0);
  CHECK(h_inner_product(h, g, ones, ones) == Catch::Approx(1.0).epsilon(1e-9));
}
