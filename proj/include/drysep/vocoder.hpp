#pragma once

#include <cstdint>
#include <optional>

#include "drysep/audio_buffer.hpp"
#include "drysep/griffin_lim.hpp"
#include "drysep/mel.hpp"
#include "drysep/stft.hpp"

namespace drysep {

// Waveform synthesis from a separated mel-spectrogram. This is the seam a
// neural vocoder would fill; here mel inversion plus Griffin-Lim keeps the
// pipeline end-to-end runnable. Deterministic given the seed.
struct VocoderRequest {
  MelSpectrogram mel;  // stage normalized or log
  std::optional<NormStats> norm_stats;  // required for normalized input
  int iterations = 32;
  uint64_t seed = 0;
};

class Vocoder {
 public:
  Vocoder(MelFilterbank fb, StftParams params, int sample_rate);

  // denormalize -> exp -> mel pseudo-inverse -> Griffin-Lim.
  // Output holds (T-1)*hop samples at the configured rate.
  AudioBuffer synthesize(const VocoderRequest& request) const;

  const MelFilterbank& filterbank() const { return fb_; }
  const StftParams& stft_params() const { return params_; }

 private:
  MelFilterbank fb_;
  MelInverter inverter_;
  StftParams params_;
  int sample_rate_;
};

// Convenience wrapper over the pipeline defaults (80 mels, 1024/256 STFT,
// 24 kHz).
AudioBuffer synthesize(const VocoderRequest& request);

}  // namespace drysep
