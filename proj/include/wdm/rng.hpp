#ifndef WDM_RNG_HPP
#define WDM_RNG_HPP

#include <cmath>
#include <cstdint>

namespace wdm {

// Deterministic RNG with hand-rolled distributions. std::uniform_real_distribution
// and friends are implementation-defined, which would break the bit-identical
// reproducibility contract, so we only rely on the engine-level stream here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // warm up splitmix so nearby seeds decorrelate
    next_u64();
    next_u64();
  }

  std::uint64_t next_u64() {
    // splitmix64
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  std::uint64_t uniform_int(std::uint64_t n) {
    // rejection sampling to avoid modulo bias
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  double normal() {
    // Box-Muller, one value per draw
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  // derive an independent stream, e.g. for per-sample or per-cell work
  Rng fork(std::uint64_t stream_id) {
    Rng r(state_ ^ (0x94d049bb133111ebULL * (stream_id + 1)));
    return r;
  }

 private:
  std::uint64_t state_;
};

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  a ^= b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2);
  return a;
}

}  // namespace wdm

#endif
