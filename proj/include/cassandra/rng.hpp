#pragma once

#include <cstdint>

namespace cassandra {

// splitmix64 generator; the single RNG used for weight init, calibration
// samples, and sampling so runs are reproducible from one seed.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t below(std::uint64_t n) { return next() % n; }

  // derive an independent stream
  SplitMix64 fork(std::uint64_t salt) const {
    SplitMix64 g(state ^ (0x632be59bd9b4e019ull * (salt + 1)));
    g.next();
    return g;
  }
};

}  // namespace cassandra
