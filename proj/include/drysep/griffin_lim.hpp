#pragma once

#include <cstdint>

#include "drysep/stft.hpp"

namespace drysep {

// Plain Griffin-Lim: random initial phase from the seed, then alternating
// magnitude projection and STFT consistency. Deterministic given the seed.
AudioBuffer griffin_lim(const MagnitudeSpectrogram& mag, const StftParams& params,
                        int sample_rate, int iterations = 32, uint64_t seed = 0);

// ||  |STFT(x)| - mag || / ||mag||, the consistency distance Griffin-Lim
// shrinks; used by tests and diagnostics.
double spectral_convergence(const AudioBuffer& x, const MagnitudeSpectrogram& mag,
                            const StftParams& params);

}  // namespace drysep
