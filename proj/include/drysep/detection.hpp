#pragma once

#include <cstddef>
#include <vector>

#include "drysep/mel.hpp"
#include "drysep/stft.hpp"

namespace drysep {

enum class MaskKind { target, predicted };

// Per-frame voice-presence values: binary for targets, [0, 1] for
// detector predictions.
struct DetectionMask {
  std::vector<double> values;
  MaskKind kind = MaskKind::target;

  size_t frames() const { return values.size(); }
  void validate() const;
};

constexpr double kDetectionThreshold = 4.0;

// Frame t maps to 1 when sum_f mag[t,f]^2 >= threshold, 0 otherwise.
// Computed on the linear magnitude spectrogram of the dry voice.
DetectionMask target_detection_mask(const MagnitudeSpectrogram& mag,
                                    double threshold = kDetectionThreshold);

// Row t is mask[t] repeated n_mels times (T x M row-major).
std::vector<double> broadcast_mask(const DetectionMask& mask, size_t n_mels = 80);

// Elementwise product with the broadcast mask; the mel stage is preserved.
MelSpectrogram apply_mask(const MelSpectrogram& mel, const DetectionMask& mask);

}  // namespace drysep
