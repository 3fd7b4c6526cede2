#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>

#include "mopt/kernels.hpp"

namespace mopt {

// Deterministic random stream: xoshiro256++ seeded through splitmix64.
// Substreams are derived from the construction seed and a key, not from the
// current state, so parallel units get independent, order-insensitive
// streams. Integer outputs are platform-independent; floating outputs are
// derived from them with exact arithmetic where possible.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : root_(seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) word = splitmix64(x);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller; the pair's second value is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    const double u2 = uniform01();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.28318530717958647692 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  // Child stream independent of the parent's consumption position.
  RngStream substream(std::uint64_t key) const {
    std::uint64_t x = root_ ^ (0x9E3779B97F4A7C15ULL * (key + 1));
    return RngStream(splitmix64(x));
  }

  std::uint64_t root_seed() const { return root_; }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
  }

  static std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t root_;
  std::array<std::uint64_t, 4> state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Batched standard normals through the vectorized Box-Muller kernel. Uses
// the stream's uniforms pairwise, so the draw sequence differs from calling
// normal() n times but is equally deterministic.
inline void fill_normal(RngStream& rng, double* out, std::size_t n) {
  constexpr std::size_t kChunk = 128;
  double u1[kChunk], u2[kChunk], buf[2 * kChunk];
  std::size_t done = 0;
  while (done < n) {
    const std::size_t want = n - done;
    const std::size_t pairs = std::min(kChunk, (want + 1) / 2);
    for (std::size_t i = 0; i < pairs; ++i) {
      u1[i] = std::max(rng.uniform01(), 0x1.0p-53);
      u2[i] = rng.uniform01();
    }
    kernels::box_muller(u1, u2, buf, pairs);
    const std::size_t take = std::min(2 * pairs, want);
    std::copy(buf, buf + take, out + done);
    done += take;
  }
}

}  // namespace mopt
