#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace gi {

// Deterministic RNG. mt19937_64 has a fully specified sequence; the
// distribution transforms below are hand-rolled so that streams are
// bit-identical across platforms and standard library versions.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Uniform strictly inside the open interval (lo, hi).
  double uniform_open(double lo, double hi) {
    for (;;) {
      double u = lo + uniform() * (hi - lo);
      if (u > lo && u < hi) return u;
    }
  }

  double uniform_closed(double lo, double hi) {
    return lo + uniform() * (hi - lo);
  }

  // Standard normal via Box-Muller, one pair per two calls.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  // Derived stream for parallel lanes / per-target seeds.
  static uint64_t derive_seed(uint64_t seed, uint64_t stream) {
    // splitmix64 over (seed + stream); decorrelates adjacent streams.
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gi
