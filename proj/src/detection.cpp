#include "drysep/detection.hpp"

#include "drysep/errors.hpp"

namespace drysep {

void DetectionMask::validate() const {
  for (double v : values) {
    const bool ok = kind == MaskKind::target ? (v == 0.0 || v == 1.0) : (v >= 0.0 && v <= 1.0);
    if (!ok) throw DataError("detection mask: value outside its kind's range");
  }
}

DetectionMask target_detection_mask(const MagnitudeSpectrogram& mag, double threshold) {
  DetectionMask mask;
  mask.kind = MaskKind::target;
  mask.values.resize(mag.frames);
  for (size_t t = 0; t < mag.frames; ++t) {
    double energy = 0.0;
    for (size_t f = 0; f < mag.bins; ++f) {
      const double v = mag.at(t, f);
      energy += v * v;
    }
    mask.values[t] = energy >= threshold ? 1.0 : 0.0;
  }
  return mask;
}

std::vector<double> broadcast_mask(const DetectionMask& mask, size_t n_mels) {
  std::vector<double> out(mask.frames() * n_mels);
  for (size_t t = 0; t < mask.frames(); ++t) {
    for (size_t m = 0; m < n_mels; ++m) out[t * n_mels + m] = mask.values[t];
  }
  return out;
}

MelSpectrogram apply_mask(const MelSpectrogram& mel, const DetectionMask& mask) {
  if (mel.frames != mask.frames()) {
    throw DataError("apply_mask: frame count mismatch (mel " + std::to_string(mel.frames) +
                    ", mask " + std::to_string(mask.frames()) + ")");
  }
  MelSpectrogram out = mel;
  for (size_t t = 0; t < mel.frames; ++t) {
    const double m = mask.values[t];
    for (size_t j = 0; j < mel.n_mels; ++j) out.at(t, j) *= m;
  }
  return out;
}

}  // namespace drysep
