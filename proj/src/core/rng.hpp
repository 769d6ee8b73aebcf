#pragma once

#include <cmath>
#include <cstdint>

namespace synthdet {

// 64-bit avalanche mixer (the splitmix64 finalizer). Used both as the
// generator's output function and to derive substream seeds.
inline uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Deterministic stream generator (splitmix64). All randomness in the
// toolkit flows through this class so outputs are reproducible across
// platforms and thread counts; std::random distributions are avoided on
// purpose because their output is implementation-defined.
class Rng {
 public:
  static constexpr uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

  explicit Rng(uint64_t seed = 0) : state_(seed) {}

  // Independent substream for sample index i of a run seeded with
  // master_seed: seed_i = mix64(master_seed XOR kGoldenGamma * (i + 1)).
  static Rng substream(uint64_t master_seed, uint64_t index) {
    return Rng(mix64(master_seed ^ (kGoldenGamma * (index + 1))));
  }

  uint64_t next_u64() {
    state_ += kGoldenGamma;
    return mix64(state_);
  }

  // Uniform in [0,1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0,n). Unbiased via rejection. n <= 1 consumes no
  // randomness and returns 0 (keeps degenerate draws out of the stream).
  uint64_t uniform_int(uint64_t n) {
    if (n <= 1) return 0;
    uint64_t rem = (UINT64_MAX % n + 1) % n;  // 2^64 mod n
    if (rem == 0) return next_u64() % n;
    uint64_t bound = 0 - rem;  // largest multiple of n representable
    for (;;) {
      uint64_t x = next_u64();
      if (x < bound) return x % n;
    }
  }

  // Uniform in [lo,hi). Always consumes exactly one draw; exact at lo
  // when hi == lo.
  double uniform_real(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Standard normal via Box-Muller. Always two draws, no cached spare, so
  // the stream position is a pure function of the call count.
  double gaussian() {
    double u1 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

 private:
  uint64_t state_;
};

}  // namespace synthdet
