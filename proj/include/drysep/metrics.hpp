#pragma once

#include <string>
#include <vector>

#include "drysep/audio_buffer.hpp"
#include "drysep/stft.hpp"

namespace drysep {

// Results are capped to +/- 150 dB so identity and degenerate cases stay
// finite in reports.
constexpr double kMetricCapDb = 150.0;

// Scale-invariant spectrogram-to-noise ratio: the prediction is projected
// onto the reference, the residual is the noise. Inputs are flattened
// nonnegative matrices of equal size (magnitude spectrograms or mels).
double sispnr(const std::vector<double>& predicted, const std::vector<double>& target);

// Spectrogram-to-distortion ratio: 10*log10(||S||^2 / ||S_hat - S||^2).
// Not scale invariant by design.
double spdr(const std::vector<double>& predicted, const std::vector<double>& target);

double sispnr(const MagnitudeSpectrogram& predicted, const MagnitudeSpectrogram& target);
double spdr(const MagnitudeSpectrogram& predicted, const MagnitudeSpectrogram& target);

struct ClipMetrics {
  std::string clip_id;
  double sispnr_db = 0.0;
  double spdr_db = 0.0;
};

struct MetricSummary {
  double sispnr_mean = 0.0, sispnr_std = 0.0;
  double spdr_mean = 0.0, spdr_std = 0.0;
  size_t count = 0;
};

struct MetricReport {
  std::vector<ClipMetrics> rows;
  MetricSummary summarize() const;
};

// Both metrics on magnitude(stft(.)); the shorter signal is zero-padded.
ClipMetrics evaluate_clip(const std::string& clip_id, const AudioBuffer& predicted,
                          const AudioBuffer& target, const StftParams& params);

}  // namespace drysep
