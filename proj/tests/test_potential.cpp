#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "fbmlab/potential.hpp"

using namespace fbmlab;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double a : v) x(i++) = a;
  return x;
}

}  // namespace

TEST_CASE("newton kernel branches", "[potential]") {
  CHECK(newton_kernel(-1.0, 0.37, 4.0) == 1.0);
  CHECK(newton_kernel(-1.0, 0.0, 4.0) == 1.0);
  CHECK(newton_kernel(0.0, 4.0, 4.0) == 0.0);  // log(N0/N0)
  CHECK(newton_kernel(2.0, 0.5, 4.0) == 4.0);
  CHECK(std::isinf(newton_kernel(0.5, 0.0, 4.0)));
}

TEST_CASE("set descriptors parse and report geometry", "[potential]") {
  const CompactSet ball = parse_compact_set("ball(0.5 0 0; 0.1)");
  CHECK(ball.kind == CompactSet::Kind::ball);
  CHECK(ball.dim() == 3);
  CHECK(ball.radius == 0.1);
  CHECK(ball.contains(vec({0.55, 0.0, 0.0})));
  CHECK_FALSE(ball.contains(vec({0.7, 0.0, 0.0})));
  CHECK(ball.distance(vec({0.8, 0.0, 0.0})) == Catch::Approx(0.2));

  const CompactSet box = parse_compact_set("box(-1 -1; 1 2)");
  CHECK(box.contains(vec({0.0, 1.5})));
  CHECK(box.distance(vec({2.0, 0.0})) == Catch::Approx(1.0));

  const CompactSet u = parse_compact_set("union(point(0) | box(2; 3))");
  CHECK(u.contains(vec({0.0})));
  CHECK(u.contains(vec({2.5})));
  CHECK(u.distance(vec({1.2})) == Catch::Approx(0.8));

  CHECK_THROWS_AS(parse_compact_set("blob(1)"), ConfigError);
  CHECK_THROWS_AS(parse_compact_set("ball(0 0; 0.1) extra"), ConfigError);
  CHECK_THROWS_AS(parse_compact_set("box(1; 0)"), DomainError);
}

TEST_CASE("discrete measure validation", "[potential]") {
  DiscreteMeasure mu;
  mu.support = Eigen::MatrixXd::Zero(2, 1);
  mu.support << 0.0, 1.0;
  mu.weights = Eigen::VectorXd::Constant(2, 0.5);
  CHECK_NOTHROW(mu.validate());
  const CompactSet seg = parse_compact_set("box(0; 1)");
  CHECK_NOTHROW(mu.validate(&seg));
  mu.weights(0) = -0.1;
  mu.weights(1) = 1.1;
  CHECK_THROWS_AS(mu.validate(), DomainError);
}

TEST_CASE("energy closed forms", "[potential]") {
  // point mass with alpha < 0: kernel is 1 everywhere
  DiscreteMeasure point;
  point.support = Eigen::MatrixXd::Zero(1, 1);
  point.weights = Eigen::VectorXd::Ones(1);
  CHECK(energy(point, -0.5, 4.0, 1e-6).total == 1.0);

  // two atoms of weight 1/2 at distance 1, alpha = 1: off-diagonal part is
  // 2 * (1/2)^2 * K(1) = 1/2
  DiscreteMeasure two;
  two.support = Eigen::MatrixXd::Zero(2, 1);
  two.support << 0.0, 1.0;
  two.weights = Eigen::VectorXd::Constant(2, 0.5);
  const EnergyValue e = energy(two, 1.0, 4.0, 1e-9);
  CHECK(e.off_diagonal == Catch::Approx(0.5));
  CHECK(e.total == Catch::Approx(0.5 + 2.0 * 0.25 * 1e9));

  // uniform 100 atoms on [0,1], alpha = 1/2: the mollified total crosses the
  // analytic double integral 8/3 on its way up as eps -> 0 (the crossing sits
  // near eps = h/8 for this kernel); check the crossing and the monotonicity
  DiscreteMeasure uni;
  const int k = 100;
  uni.support.resize(k, 1);
  for (int i = 0; i < k; ++i) uni.support(i, 0) = (i + 0.5) / k;
  uni.weights = Eigen::VectorXd::Constant(k, 1.0 / k);
  const double h = 1.0 / k;
  CHECK(energy(uni, 0.5, 4.0, h / 8.0).total == Catch::Approx(8.0 / 3.0).epsilon(0.05));
  CHECK(energy(uni, 0.5, 4.0, h / 2.0).total < energy(uni, 0.5, 4.0, h / 8.0).total);
  CHECK(energy(uni, 0.5, 4.0, h / 8.0).total < energy(uni, 0.5, 4.0, h / 32.0).total);
}

TEST_CASE("meshes stay inside their sets", "[potential]") {
  const CompactSet ball3 = parse_compact_set("ball(0 0 0; 0.2)");
  const SetMesh m3 = mesh_set(ball3, 400);
  CHECK(m3.points.rows() >= 200);
  for (Eigen::Index i = 0; i < m3.points.rows(); ++i)
    CHECK(ball3.contains(m3.points.row(i).transpose(), 1e-9));

  const CompactSet seg = parse_compact_set("box(0; 1)");
  const SetMesh ms = mesh_set(seg, 64);
  CHECK(ms.points.rows() == 64);
  CHECK(ms.spacing == Catch::Approx(1.0 / 63.0));

  const SetMesh mp = mesh_set(parse_compact_set("point(0.3 0.4)"), 10);
  CHECK(mp.points.rows() == 1);
  CHECK(mp.spacing == 0.0);
}

TEST_CASE("hausdorff content", "[potential]") {
  const CompactSet point = parse_compact_set("point(0.5)");
  CHECK(hausdorff_content(point, 1.0, 1e-3) == Catch::Approx(2e-3));
  CHECK(hausdorff_content(point, 0.0, 1e-3) == 1.0);
  CHECK(std::isinf(hausdorff_content(point, -0.5, 1e-3)));

  const CompactSet seg = parse_compact_set("box(0; 1)");
  const double eps = 1.0 / 256.0;
  const double content = hausdorff_content(seg, 1.0, eps);
  CHECK(content >= 1.0);
  CHECK(content <= 1.2);

  // content of a point vanishes with the scale for alpha > 0
  CHECK(hausdorff_content(point, 0.5, 1e-6) < hausdorff_content(point, 0.5, 1e-3));
}
