#pragma once
// Deterministic random number generation.
//
// Every random draw in the library flows through SplitMix64 streams seeded
// explicitly by the caller, so identical seeds give bit-identical sequences
// on every platform. The <random> distributions are deliberately avoided:
// their outputs are implementation-defined and would break reproducibility
// across standard libraries.

#include <cmath>
#include <cstdint>

namespace amid {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal, Box-Muller cosine branch. u1 is mapped into (0, 1] so
  // the log stays finite.
  double next_normal() {
    const double u1 = 1.0 - next_double();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kTwoPiHalf * u2);
  }

 private:
  static constexpr double kTwoPiHalf = 3.14159265358979323846;
  std::uint64_t state_;
};

// Stable derivation of an independent child stream from a master seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  SplitMix64 g(seed ^ (0xa0761d6478bd642fULL * (salt + 1)));
  return g.next_u64();
}

}  // namespace amid
