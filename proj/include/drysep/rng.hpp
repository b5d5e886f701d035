#pragma once

#include <cstdint>
#include <cstddef>

namespace drysep {

// Deterministic counter-friendly PRNG (splitmix64 core). We avoid
// std::uniform_*_distribution because its output is implementation-defined;
// every random draw in the pipeline must be reproducible byte-for-byte.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform double in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform double in [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n), n > 0
  size_t uniform_index(size_t n) { return static_cast<size_t>(next_u64() % n); }

  // standard normal via Box-Muller (always consumes two draws)
  double normal();

 private:
  uint64_t state_;
};

// Stable stream derivation: one master seed fans out into independent,
// individually re-seedable streams keyed by (stream id, step). Resuming a
// run at step k reproduces exactly the draws of an uninterrupted run.
uint64_t derive_seed(uint64_t master, uint64_t stream, uint64_t step);

}  // namespace drysep
