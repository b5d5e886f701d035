#include "drysep/rng.hpp"

#include <cmath>

namespace drysep {

double Rng::normal() {
  // Box-Muller; discard the second value so draw counts stay predictable.
  double u1 = uniform();
  double u2 = uniform();
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

uint64_t derive_seed(uint64_t master, uint64_t stream, uint64_t step) {
  Rng mix(master ^ (stream * 0xd1342543de82ef95ull) ^ (step * 0xaf251af3b0f025b5ull));
  mix.next_u64();
  return mix.next_u64();
}

}  // namespace drysep
