#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace fbmlab {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).  Every variate
// is addressed by (seed, stream, index), so Monte-Carlo draws are reproducible
// independently of worker count and of how many paths are generated.
namespace philox {

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline std::array<std::uint32_t, 4> block(std::uint64_t key, std::uint64_t stream,
                                          std::uint64_t counter) {
  std::uint32_t c0 = static_cast<std::uint32_t>(counter);
  std::uint32_t c1 = static_cast<std::uint32_t>(counter >> 32);
  std::uint32_t c2 = static_cast<std::uint32_t>(stream);
  std::uint32_t c3 = static_cast<std::uint32_t>(stream >> 32);
  std::uint32_t k0 = static_cast<std::uint32_t>(key);
  std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(0xD2511F53u, c0, hi0, lo0);
    mulhilo(0xCD9E8D57u, c2, hi1, lo1);
    const std::uint32_t n0 = hi1 ^ c1 ^ k0;
    const std::uint32_t n1 = lo1;
    const std::uint32_t n2 = hi0 ^ c3 ^ k1;
    const std::uint32_t n3 = lo0;
    c0 = n0; c1 = n1; c2 = n2; c3 = n3;
    k0 += 0x9E3779B9u;
    k1 += 0xBB67AE85u;
  }
  return {c0, c1, c2, c3};
}

}  // namespace philox

/// splitmix64 mixer, used to derive sub-seeds from a master seed.
inline std::uint64_t mix_seed(std::uint64_t x, std::uint64_t salt) {
  std::uint64_t z = x + 0x9E3779B97F4A7C15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// A stream of i.i.d. variates addressed by index.  Streams with distinct
/// (seed, stream) pairs are independent; typical use keys the stream by
/// (path index, purpose tag).
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  static std::uint64_t stream_id(std::uint64_t path, std::uint32_t tag) {
    return (static_cast<std::uint64_t>(tag) << 40) ^ path;
  }

  /// i-th Uniform(0,1) variate (strictly inside the open interval).
  double uniform(std::uint64_t i) const {
    const auto b = philox::block(seed_, stream_, i);
    const std::uint64_t bits = (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  /// i-th standard normal variate, via Box-Muller on one Philox block.
  double normal(std::uint64_t i) const {
    const auto b = philox::block(seed_, stream_, i >> 1);
    const std::uint64_t u1bits = (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
    const std::uint64_t u2bits = (static_cast<std::uint64_t>(b[2]) << 32) | b[3];
    const double u1 = (static_cast<double>(u1bits >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = (static_cast<double>(u2bits >> 11) + 0.5) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    return (i & 1) ? r * std::sin(theta) : r * std::cos(theta);
  }

  /// Normals 0..count-1 in one sweep; identical values to normal(i) but each
  /// Philox block is expanded once instead of twice.
  void normals(std::size_t count, double* out) const {
    for (std::size_t i = 0; i < count; i += 2) {
      const auto b = philox::block(seed_, stream_, i >> 1);
      const std::uint64_t u1bits = (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
      const std::uint64_t u2bits = (static_cast<std::uint64_t>(b[2]) << 32) | b[3];
      const double u1 = (static_cast<double>(u1bits >> 11) + 0.5) * 0x1.0p-53;
      const double u2 = (static_cast<double>(u2bits >> 11) + 0.5) * 0x1.0p-53;
      const double r = std::sqrt(-2.0 * std::log(u1));
      const double theta = 6.283185307179586476925286766559 * u2;
      out[i] = r * std::cos(theta);
      if (i + 1 < count) out[i + 1] = r * std::sin(theta);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
};

// Purpose tags for RandomStream::stream_id.  Keeping them in one place avoids
// accidental stream collisions between subsystems.
namespace rng_tag {
constexpr std::uint32_t fbm_increments = 1;
constexpr std::uint32_t fbm_spectrum = 2;
constexpr std::uint32_t kl_coefficients = 3;
constexpr std::uint32_t ellipticity_probe = 4;
constexpr std::uint32_t generic_mc = 5;
constexpr std::uint32_t kl_increments = 6;
}  // namespace rng_tag

}  // namespace fbmlab
