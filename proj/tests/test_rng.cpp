#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "fbmlab/rng.hpp"

using namespace fbmlab;

TEST_CASE("philox known-answer vectors", "[rng]") {
  // Reference vectors for Philox4x32-10 (Salmon et al. / Random123).
  auto zero = philox::block(0, 0, 0);
  CHECK(zero[0] == 0x6627e8d5u);
  CHECK(zero[1] == 0xe169c58du);
  CHECK(zero[2] == 0xbc57ac4cu);
  CHECK(zero[3] == 0x9b00dbd8u);

  auto ones = philox::block(~0ull, ~0ull, ~0ull);
  CHECK(ones[0] == 0x408f276du);
  CHECK(ones[1] == 0x41c83b0eu);
  CHECK(ones[2] == 0xa20bc7c6u);
  CHECK(ones[3] == 0x6d5451fdu);
}

TEST_CASE("streams are deterministic and index-addressable", "[rng]") {
  RandomStream a(42, 7), b(42, 7), c(42, 8);
  for (std::uint64_t i = 0; i < 50; ++i) {
    CHECK(a.normal(i) == b.normal(i));
    CHECK(a.uniform(i) == b.uniform(i));
  }
  // out-of-order access gives identical values
  CHECK(a.normal(33) == b.normal(33));
  CHECK(a.normal(0) == b.normal(0));
  // distinct streams decorrelate
  int same = 0;
  for (std::uint64_t i = 0; i < 100; ++i)
    if (a.normal(i) == c.normal(i)) ++same;
  CHECK(same == 0);
}

TEST_CASE("normal stream has standard moments", "[rng]") {
  RandomStream s(123, 1);
  const std::size_t n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = s.normal(i);
    sum += z;
    sumsq += z * z;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("uniforms stay strictly inside (0,1)", "[rng]") {
  RandomStream s(99, 2);
  for (std::uint64_t i = 0; i < 10000; ++i) {
    const double u = s.uniform(i);
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
}
