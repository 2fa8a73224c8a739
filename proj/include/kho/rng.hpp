#pragma once
#include <cstdint>

namespace kho {

// Counter-based PRNG: every draw is a pure hash of (seed, stream, counter), so
// results do not depend on evaluation order or thread layout.  The mixer is the
// splitmix64 finalizer, which is well distributed for sequential counters.
inline uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline uint64_t hash_at(uint64_t seed, uint64_t stream, uint64_t counter) {
  // decorrelate the three keys before the final mix
  uint64_t h = mix64(seed ^ 0x8537be5468ce315bull);
  h = mix64(h ^ stream * 0x2545f4914f6cdd1dull);
  return mix64(h ^ counter * 0x9e3779b97f4a7c15ull);
}

// uniform in [0, 1), 53 random bits
inline double unit_at(uint64_t seed, uint64_t stream, uint64_t counter) {
  return double(hash_at(seed, stream, counter) >> 11) * 0x1.0p-53;
}

// Convenience stateful view of one (seed, stream) counter sequence.
class Rng {
public:
  Rng(uint64_t seed, uint64_t stream) : seed_(seed), stream_(stream) {}
  double unit() { return unit_at(seed_, stream_, n_++); }           // [0, 1)
  double range(double a, double b) { return a + (b - a) * unit(); }
  uint64_t bits() { return hash_at(seed_, stream_, n_++); }
  uint64_t taken() const { return n_; }

private:
  uint64_t seed_, stream_, n_ = 0;
};

}  // namespace kho
