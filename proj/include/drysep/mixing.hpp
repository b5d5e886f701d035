#pragma once

#include <string>
#include <vector>

#include "drysep/audio_buffer.hpp"
#include "drysep/rng.hpp"

namespace drysep {

// Spatial room impulse response, stored mono and peak-normalized to
// max |h| = 1 so the reverberation coefficient alone controls wet level.
struct Srir {
  AudioBuffer impulse;
  std::string identifier;

  static Srir from_buffer(AudioBuffer buffer, std::string identifier);
};

struct ReverbSpec {
  const Srir* srir = nullptr;
  double alpha = 0.0;  // reverberation coefficient in [0, 1]

  void validate() const;
};

// x_r = alpha * (h * x_d), full convolution truncated to len(x_d) so the
// wet signal stays time-aligned with the dry one.
AudioBuffer render_reverb(const AudioBuffer& dry, const ReverbSpec& spec);

// y = x_d + x_r + x_a, elementwise
AudioBuffer mix(const AudioBuffer& x_d, const AudioBuffer& x_r, const AudioBuffer& x_a);

struct SegmentResult {
  std::vector<AudioBuffer> buffers;
  size_t offset = 0;
  bool padded = false;  // inputs shorter than the segment were zero-padded
};

// Time-aligned random crop: one shared offset for all buffers. Inputs
// shorter than the segment are zero-padded to it and flagged.
SegmentResult segment_random(const std::vector<AudioBuffer>& buffers, double seconds, Rng& rng);

struct AugmentedExample {
  AudioBuffer mixture;  // y
  AudioBuffer dry;      // x_d
  double alpha = 0.0;
};

// Mix-audio augmentation: one singing voice plus two accompaniments from
// other tracks, with reverb rendered at the given coefficient.
AugmentedExample mix_audio_augment(const AudioBuffer& voice, const AudioBuffer& acc1,
                                   const AudioBuffer& acc2, const ReverbSpec& spec);

// Same, with alpha drawn fresh from uniform [0, 1).
AugmentedExample mix_audio_augment(const AudioBuffer& voice, const AudioBuffer& acc1,
                                   const AudioBuffer& acc2, const Srir& srir, Rng& rng);

}  // namespace drysep
