#pragma once

#include <cstdint>
#include <limits>

namespace battleship {

// Deterministic 64-bit PRNG with implementation-independent bounded draws.
// std::uniform_int_distribution is implementation-defined, which would break
// the byte-identical-trajectory guarantee across standard libraries, so all
// randomness in the project goes through this wrapper.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // Warm up so that low-entropy seeds (0, 1, 2, ...) diverge immediately.
    next();
    next();
  }

  std::uint64_t next() {
    // splitmix64 (Steele, Lea, Flood 2014); passes BigCrush, trivially seedable.
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Unbiased integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t threshold = -bound % bound;  // 2^64 mod bound
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  std::size_t index(std::size_t size) { return static_cast<std::size_t>(below(size)); }

  // Uniform double in [0, 1) with 53 bits of precision.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return unit() < p; }

  // Independent stream derived from this rng's seed material and a stream id.
  // Forking does not consume state from the parent.
  Rng fork(std::uint64_t stream) const {
    std::uint64_t z = state_ ^ (0xA0761D6478BD642FULL * (stream + 1));
    z = (z ^ (z >> 32)) * 0xE7037ED1A0B428DBULL;
    return Rng(z ^ (z >> 29));
  }

  template <typename T>
  void shuffle(T& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = index(i);
      using std::swap;
      swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

// Stable seed derivation for named substreams (per-game captain/spotter/board
// streams in tournaments).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
  Rng r(master);
  std::uint64_t z = r.next() ^ (a * 0x9E3779B97F4A7C15ULL);
  z ^= (b + 0x165667B19E3779F9ULL) * 0xC2B2AE3D27D4EB4FULL;
  z ^= (c + 0x27D4EB2F165667C5ULL) * 0x9E3779B97F4A7C15ULL;
  Rng r2(z);
  return r2.next();
}

}  // namespace battleship
