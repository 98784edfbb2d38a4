#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace ggmcp {

// Seeded RNG used everywhere results must be reproducible. Normal draws use
// Box-Muller rather than std::normal_distribution so streams do not depend on
// standard-library internals.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1], safe under log().
  double uniform_pos() {
    return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Uniform integer on {lo, ..., hi}, both ends included.
  int uniform_int(int lo, int hi) {
    const uint64_t range = static_cast<uint64_t>(hi - lo) + 1;
    const uint64_t reject_above = UINT64_MAX - UINT64_MAX % range;
    uint64_t x = gen_();
    while (x >= reject_above) x = gen_();
    return lo + static_cast<int>(x % range);
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
    const double a = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // splitmix64-style mixing for deriving independent stream seeds.
  static uint64_t mix(uint64_t a, uint64_t b) {
    uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ggmcp
