#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "drysep/audio_buffer.hpp"

namespace drysep {

enum class WindowKind { hann, rectangular };

struct StftParams {
  int fft_size = 1024;
  int hop = 256;
  WindowKind window = WindowKind::hann;
  bool center_padding = true;  // reflect padding of fft_size/2 on both sides

  int bins() const { return fft_size / 2 + 1; }
  void validate() const;  // hop <= fft_size, fft_size power of two
};

std::vector<double> make_window(const StftParams& params);

// T x F row-major complex frames, F = fft_size/2 + 1.
struct ComplexSpectrogram {
  size_t frames = 0;
  size_t bins = 0;
  std::vector<std::complex<double>> data;
  StftParams params;
  int source_rate = 0;
  // Length the inverse transform should reconstruct. Spectrograms built
  // without a source signal (e.g. Griffin-Lim iterates) use (frames-1)*hop.
  size_t source_length = 0;

  std::complex<double>& at(size_t t, size_t f) { return data[t * bins + f]; }
  const std::complex<double>& at(size_t t, size_t f) const { return data[t * bins + f]; }
};

struct MagnitudeSpectrogram {
  size_t frames = 0;
  size_t bins = 0;
  std::vector<double> data;  // row-major, nonnegative

  double& at(size_t t, size_t f) { return data[t * bins + f]; }
  double at(size_t t, size_t f) const { return data[t * bins + f]; }
};

// With center padding T = 1 + floor(len/hop); frame k covers padded samples
// [k*hop, k*hop + fft_size).
ComplexSpectrogram stft(const AudioBuffer& buffer, const StftParams& params);

// Weighted overlap-add with window-square normalization; exact inverse of
// stft on all source samples.
AudioBuffer istft(const ComplexSpectrogram& spec);

MagnitudeSpectrogram magnitude(const ComplexSpectrogram& spec);

}  // namespace drysep
