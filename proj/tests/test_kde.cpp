#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "fbmlab/kde.hpp"
#include "fbmlab/rng.hpp"

using namespace fbmlab;

TEST_CASE("kde recovers the standard normal density", "[kde]") {
  RandomStream s(7, 0);
  const std::size_t k = 100000;
  Eigen::MatrixXd samples(static_cast<Eigen::Index>(k), 1);
  for (std::size_t i = 0; i < k; ++i) samples(static_cast<Eigen::Index>(i), 0) = s.normal(i);
  const Eigen::MatrixXd grid = eval_grid_1d(-4.0, 4.0, 161);
  const DensityEstimate est = estimate_density(samples, grid);
  double worst = 0.0;
  for (std::size_t i = 0; i < est.density.size(); ++i) {
    const double z = est.eval_points(static_cast<Eigen::Index>(i), 0);
    worst = std::max(worst, std::abs(est.density[i] - standard_normal_pdf(z)));
  }
  CHECK(worst <= 0.01);
  CHECK(kde_integral(est) == Catch::Approx(1.0).margin(0.05));
  CHECK(kde_integral(est) >= 0.9);
}

TEST_CASE("kde handles identical samples as a spike of mass one", "[kde]") {
  Eigen::MatrixXd samples = Eigen::MatrixXd::Constant(5000, 1, 0.75);
  const Eigen::MatrixXd grid = eval_grid_1d(0.75 - 0.02, 0.75 + 0.02, 801);
  const DensityEstimate est = estimate_density(samples, grid);
  CHECK(kde_integral(est) == Catch::Approx(1.0).margin(0.02));
  CHECK(est.bandwidth(0) == Catch::Approx(1e-3));
}

TEST_CASE("kde matches a 2-d product normal", "[kde]") {
  RandomStream s(8, 0);
  const std::size_t k = 100000;
  Eigen::MatrixXd samples(static_cast<Eigen::Index>(k), 2);
  for (std::size_t i = 0; i < k; ++i) {
    samples(static_cast<Eigen::Index>(i), 0) = s.normal(2 * i);
    samples(static_cast<Eigen::Index>(i), 1) = s.normal(2 * i + 1);
  }
  const Eigen::MatrixXd grid = eval_grid_2d(-3.0, 3.0, -3.0, 3.0, 41);
  const DensityEstimate est = estimate_density(samples, grid);
  double worst = 0.0;
  for (std::size_t i = 0; i < est.density.size(); ++i) {
    const double x = est.eval_points(static_cast<Eigen::Index>(i), 0);
    const double y = est.eval_points(static_cast<Eigen::Index>(i), 1);
    worst = std::max(worst,
                     std::abs(est.density[i] - standard_normal_pdf(x) * standard_normal_pdf(y)));
  }
  CHECK(worst <= 0.02);
}

TEST_CASE("kde input validation", "[kde]") {
  Eigen::MatrixXd empty(0, 1);
  CHECK_THROWS_AS(estimate_density(empty, eval_grid_1d(0, 1, 5)), DomainError);
  Eigen::MatrixXd one = Eigen::MatrixXd::Zero(10, 2);
  CHECK_THROWS_AS(estimate_density(one, eval_grid_1d(0, 1, 5)), DomainError);
}

TEST_CASE("noise floor follows the 10-samples-per-window rule", "[kde]") {
  RandomStream s(9, 0);
  Eigen::MatrixXd samples(2000, 1);
  for (int i = 0; i < 2000; ++i) samples(i, 0) = s.normal(static_cast<std::uint64_t>(i));
  const DensityEstimate est = estimate_density(samples, eval_grid_1d(-3, 3, 11));
  CHECK(est.noise_floor ==
        Catch::Approx(10.0 / (2000.0 * est.bandwidth(0))));
}
