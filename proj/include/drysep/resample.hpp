#pragma once

#include "drysep/audio_buffer.hpp"

namespace drysep {

// Band-limited rational-ratio resampling with a polyphase windowed-sinc
// filter (Kaiser window, 64 taps per phase, cutoff at 0.95x the lower
// Nyquist). Output length is round(input_length * target_rate / source_rate).
// A same-rate call returns the input unchanged.
AudioBuffer resample(const AudioBuffer& buffer, int target_rate);

}  // namespace drysep
