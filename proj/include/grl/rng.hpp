#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace grl {

// Seeded random stream. mt19937_64 supplies the raw bits; Gaussians use an
// explicit Marsaglia polar transform so the variate sequence does not depend
// on the standard library's normal_distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // uniform in {0, ..., m-1}
  std::uint64_t uniform_int(std::uint64_t m) {
    // rejection to avoid modulo bias
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % m;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % m;
  }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
  }

  std::uint64_t next_u64() { return engine_(); }

  // Deterministic substream for parallel fan-out (per sample row, per chain).
  static Rng substream(std::uint64_t seed, std::uint64_t index) {
    // splitmix64 step keyed on (seed, index)
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return Rng(z ^ (z >> 31));
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace grl
