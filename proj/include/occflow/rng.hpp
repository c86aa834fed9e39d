#ifndef OCCFLOW_RNG_HPP
#define OCCFLOW_RNG_HPP

#include <cstdint>

namespace occflow {

// Counter-based splitmix64. Used instead of <random> engines so that
// streams are bit-identical across platforms and standard libraries.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Unbiased integer in [0, n) via rejection sampling.
  uint64_t next_below(uint64_t n) {
    uint64_t threshold = (0ULL - n) % n;
    for (;;) {
      uint64_t r = next();
      if (r >= threshold) return r % n;
    }
  }

  // Double in [0, 1).
  double next_unit() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  double next_range(double lo, double hi) {
    return lo + (hi - lo) * next_unit();
  }

 private:
  uint64_t state_;
};

// Stateless mix of up to three values plus a seed; used for spatial
// noise (height jitter) so the pattern is a pure function of position.
inline uint64_t hash_mix(uint64_t seed, int64_t a, int64_t b, int64_t c = 0) {
  SplitMix64 g(seed ^ (0xD6E8FEB86659FD93ULL * static_cast<uint64_t>(a + 0x7F4A7C15))
                    ^ (0xCA5A826395121157ULL * static_cast<uint64_t>(b + 0x2545F491))
                    ^ (0x9E3779B97F4A7C15ULL * static_cast<uint64_t>(c + 1)));
  return g.next();
}

// Independent per-iteration stream derived from a base seed by counter,
// so iterations can run concurrently yet reproduce bit-identically.
inline SplitMix64 stream_for(uint64_t seed, uint64_t counter) {
  return SplitMix64(seed + 0x9E3779B97F4A7C15ULL * (counter + 1));
}

}  // namespace occflow

#endif  // OCCFLOW_RNG_HPP
