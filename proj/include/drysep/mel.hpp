#pragma once

#include <cstddef>
#include <vector>

#include "drysep/stft.hpp"

namespace drysep {

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular filters with band edges uniformly spaced on the mel scale,
// area-normalized (2 / bandwidth) per filter. Row-major M x F weights.
struct MelFilterbank {
  size_t n_mels = 0;
  size_t n_bins = 0;
  std::vector<double> weights;
  std::vector<double> center_hz;  // per-filter center frequency
  // compact support per filter: [first, end) bin range with nonzero weight
  std::vector<std::pair<size_t, size_t>> support;
  double fmin = 0.0;
  double fmax = 0.0;
  int sample_rate = 0;

  double at(size_t m, size_t f) const { return weights[m * n_bins + f]; }
};

MelFilterbank build_mel_filterbank(int n_mels = 80, int fft_size = 1024,
                                   int sample_rate = 24000, double fmin = 0.0,
                                   double fmax = 12000.0);

enum class MelStage { linear, log, normalized };

struct MelSpectrogram {
  size_t frames = 0;
  size_t n_mels = 0;
  std::vector<double> data;  // row-major T x M
  MelStage stage = MelStage::linear;

  double& at(size_t t, size_t m) { return data[t * n_mels + m]; }
  double at(size_t t, size_t m) const { return data[t * n_mels + m]; }
};

struct NormStats {
  double min = 0.0;
  double max = 0.0;

  void validate() const;  // min < max
};

constexpr double kLogMelEps = 1e-5;

MelSpectrogram to_mel(const MagnitudeSpectrogram& mag, const MelFilterbank& fb);

// ln(max(v, eps)) elementwise; linear -> log
MelSpectrogram log_compress(const MelSpectrogram& mel, double eps = kLogMelEps);

// (v - min) / (max - min) clamped to [0, 1]; log -> normalized
MelSpectrogram minmax_normalize(const MelSpectrogram& mel, const NormStats& stats);

// exact inverse of minmax_normalize on [0, 1]; normalized -> log
MelSpectrogram minmax_denormalize(const MelSpectrogram& mel, const NormStats& stats);

// exp elementwise; log -> linear
MelSpectrogram log_decompress(const MelSpectrogram& mel);

// Global min/max over a set of log-mel spectrograms. Requires at least two
// distinct values across the corpus.
NormStats norm_stats_from(const std::vector<MelSpectrogram>& log_mels);

// Least-squares inversion of the filterbank (precomputed pseudo-inverse),
// negative values clamped to zero.
class MelInverter {
 public:
  explicit MelInverter(const MelFilterbank& fb);
  MagnitudeSpectrogram invert(const MelSpectrogram& mel) const;

 private:
  size_t n_mels_;
  size_t n_bins_;
  std::vector<double> pinv_;  // M x F, rows of (W W^T)^-1 W
};

MagnitudeSpectrogram mel_to_linear(const MelSpectrogram& mel, const MelFilterbank& fb);

}  // namespace drysep
