#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace nsmaxstab::mathkit {

inline constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Mixes a seed with a stream id into a fresh seed; used to derive
/// independent seeds for sub-tasks (mixture components, bootstrap resamples).
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t s = seed ^ (0xd1b54a32d192ed03ULL * (stream + 1));
  splitmix64(s);
  return splitmix64(s);
}

/// xoshiro256** engine keyed by (seed, stream id). Identical keys give
/// identical sequences; replicate r of a simulation always uses stream r.
/// Not shareable between threads.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream) noexcept {
    std::uint64_t sm = seed ^ (0x6a09e667f3bcc909ULL + stream * 0xbb67ae8584caa73bULL);
    // burn the stream id through splitmix twice so nearby ids decorrelate
    sm ^= splitmix64(sm) + stream;
    for (auto& w : s_) w = splitmix64(sm);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept { return ((*this)() >> 11) * 0x1.0p-53 + 0x1.0p-54; }

  double normal() { return normal_(*this); }

  /// Unit-rate exponential.
  double exponential() noexcept { return -std::log(uniform()); }

  double chi_squared(double k) { return std::gamma_distribution<double>(0.5 * k, 2.0)(*this); }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

  std::uint64_t s_[4]{};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace nsmaxstab::mathkit
