#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "fbmlab/fbm.hpp"
#include "fbmlab/path_stats.hpp"

using namespace fbmlab;

TEST_CASE("p-variation basics", "[path_stats]") {
  // monotone scalar path at p = 1: total increase
  std::vector<double> mono = {0.0, 0.5, 0.7, 1.1, 2.0};
  CHECK(p_variation(mono, 1.0) == Catch::Approx(2.0).margin(1e-14));
  // two-point path: the increment, any p
  std::vector<double> two = {0.25, -0.5};
  for (double p : {1.0, 1.7, 3.0}) CHECK(p_variation(two, p) == Catch::Approx(0.75));
  // zig-zag at p = 1 sums all swings
  std::vector<double> zig = {0.0, 1.0, 0.0, 1.0};
  CHECK(p_variation(zig, 1.0) == Catch::Approx(3.0));
  // ... and contracts to the largest swing as p grows
  CHECK(p_variation(zig, 50.0) == Catch::Approx(1.0).epsilon(0.03));
  CHECK_THROWS_AS(p_variation(zig, 0.5), DomainError);
}

TEST_CASE("p-variation is non-increasing in p", "[path_stats]") {
  const TimeGrid g = TimeGrid::regular(1.0, 128);
  const FbmPath path = sample_fbm(HurstParam(0.35), g, 2, 77, SampleMethod::cholesky);
  const Eigen::MatrixXd vals = path.values.transpose();
  double prev = p_variation(vals, 1.0);
  for (double p : {1.5, 2.0, 3.0, 5.0}) {
    const double v = p_variation(vals, p);
    CHECK(v <= prev * (1.0 + 1e-12));
    prev = v;
  }
}

TEST_CASE("fBm p-variation is stable under grid refinement", "[path_stats]") {
  const double H = 0.7, p = 1.0 / 0.6;
  const TimeGrid g = TimeGrid::regular(1.0, 1024);
  const FbmPath fine = sample_fbm(HurstParam(H), g, 1, 13, SampleMethod::circulant);
  Eigen::MatrixXd full = fine.values.transpose();
  Eigen::MatrixXd half(513, 1);
  for (int k = 0; k <= 512; ++k) half(k, 0) = full(2 * k, 0);
  const double v512 = p_variation(half, p);
  const double v1024 = p_variation(full, p);
  CHECK(v1024 >= v512);  // sub-partition supremum grows with the grid
  CHECK((v1024 - v512) / v512 < 0.05);
}

TEST_CASE("greedy partition count on deterministic paths", "[path_stats]") {
  // line t -> t on [0,1], p = 1, alpha = 0.25: breakpoints 0.25, 0.5, 0.75
  const int n = 64;
  std::vector<double> line(n + 1);
  for (int k = 0; k <= n; ++k) line[static_cast<std::size_t>(k)] = double(k) / n;
  CHECK(greedy_partition_count(line, 1.0, 0.25) == 3);
  // total variation below alpha^(1/p): zero stopping times
  CHECK(greedy_partition_count(line, 1.0, 1.5) == 0);
  // non-increasing in alpha
  int prev = 1000;
  for (double alpha : {0.05, 0.1, 0.2, 0.4, 0.9}) {
    const int c = greedy_partition_count(line, 1.0, alpha);
    CHECK(c <= prev);
    prev = c;
  }
}

TEST_CASE("greedy partition tail decays for fBm", "[path_stats]") {
  // crude tail sanity: counts concentrate at small values and the tail
  // log-probability decays superlinearly in n (consistent with exp(-c n^2)
  // for H = 0.7 where rho = (H + 1/2)^{-1} < 1... the paper's regular case)
  const double H = 0.7, p = 1.0 / H + 0.2, alpha = 1.0;
  const TimeGrid g = TimeGrid::regular(1.0, 256);
  FbmSampler sampler(HurstParam(H), g, 1, SampleMethod::circulant);
  std::vector<int> counts;
  for (std::uint64_t path = 0; path < 2000; ++path) {
    const FbmPath b = sampler.sample(300, path);
    counts.push_back(greedy_partition_count(b.values.transpose(), p, alpha));
  }
  auto tail = [&](int level) {
    int c = 0;
    for (int v : counts) c += v > level ? 1 : 0;
    return double(c) / counts.size();
  };
  const double p0 = tail(0), p1 = tail(1), p2 = tail(2);
  CHECK(p0 < 0.98);
  if (p1 > 0.0 && p2 > 0.0) {
    // concave-decreasing tail in log scale
    CHECK(std::log(p1) - std::log(p0) > std::log(p2) - std::log(p1));
  }
}
