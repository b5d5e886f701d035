#include "drysep/stft.hpp"

#include <cmath>

#include "drysep/errors.hpp"
#include "drysep/fft.hpp"

namespace drysep {

void StftParams::validate() const {
  if (fft_size <= 0 || !is_power_of_two(static_cast<size_t>(fft_size))) {
    throw ConfigError("stft: fft_size must be a positive power of two");
  }
  if (hop <= 0 || hop > fft_size) throw ConfigError("stft: require 0 < hop <= fft_size");
}

std::vector<double> make_window(const StftParams& params) {
  std::vector<double> w(static_cast<size_t>(params.fft_size), 1.0);
  if (params.window == WindowKind::hann) {
    // periodic Hann
    const double n = static_cast<double>(params.fft_size);
    for (int i = 0; i < params.fft_size; ++i) {
      w[static_cast<size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / n);
    }
  }
  return w;
}

namespace {

// reflect index without repeating the edge sample
size_t reflect_index(long long i, long long len) {
  if (len == 1) return 0;
  while (i < 0 || i >= len) {
    if (i < 0) i = -i;
    if (i >= len) i = 2 * len - 2 - i;
  }
  return static_cast<size_t>(i);
}

}  // namespace

ComplexSpectrogram stft(const AudioBuffer& buffer, const StftParams& params) {
  params.validate();
  if (!buffer.is_mono()) throw DataError("stft: expected a mono buffer");
  const auto& x = buffer.samples();
  if (x.empty()) throw DataError("stft: empty buffer");

  const long long len = static_cast<long long>(x.size());
  const int n = params.fft_size;
  const int hop = params.hop;
  const long long pad = params.center_padding ? n / 2 : 0;
  const size_t n_frames = params.center_padding
                              ? 1 + static_cast<size_t>(len / hop)
                              : (len < n ? 0 : 1 + static_cast<size_t>((len - n) / hop));
  if (n_frames == 0) throw DataError("stft: buffer shorter than one frame");

  const std::vector<double> window = make_window(params);

  ComplexSpectrogram spec;
  spec.frames = n_frames;
  spec.bins = static_cast<size_t>(params.bins());
  spec.data.resize(n_frames * spec.bins);
  spec.params = params;
  spec.source_rate = buffer.sample_rate;
  spec.source_length = x.size();

  std::vector<std::complex<double>> frame(static_cast<size_t>(n));
  for (size_t k = 0; k < n_frames; ++k) {
    const long long start = static_cast<long long>(k) * hop - pad;
    for (int i = 0; i < n; ++i) {
      const long long src = start + i;
      const double v = (src >= 0 && src < len)
                           ? x[static_cast<size_t>(src)]
                           : (params.center_padding ? x[reflect_index(src, len)] : 0.0);
      frame[static_cast<size_t>(i)] = v * window[static_cast<size_t>(i)];
    }
    fft(frame, false);
    for (size_t f = 0; f < spec.bins; ++f) spec.at(k, f) = frame[f];
  }
  return spec;
}

AudioBuffer istft(const ComplexSpectrogram& spec) {
  spec.params.validate();
  if (spec.frames == 0 || spec.bins != static_cast<size_t>(spec.params.bins())) {
    throw DataError("istft: spectrogram inconsistent with its params");
  }
  const int n = spec.params.fft_size;
  const int hop = spec.params.hop;
  const long long pad = spec.params.center_padding ? n / 2 : 0;
  const std::vector<double> window = make_window(spec.params);

  const size_t padded_len = (spec.frames - 1) * static_cast<size_t>(hop) + static_cast<size_t>(n);
  std::vector<double> acc(padded_len, 0.0);
  std::vector<double> wsum(padded_len, 0.0);

  std::vector<std::complex<double>> frame(static_cast<size_t>(n));
  for (size_t k = 0; k < spec.frames; ++k) {
    // rebuild the full conjugate-symmetric spectrum
    for (size_t f = 0; f < spec.bins; ++f) frame[f] = spec.at(k, f);
    for (size_t f = spec.bins; f < static_cast<size_t>(n); ++f) {
      frame[f] = std::conj(spec.at(k, static_cast<size_t>(n) - f));
    }
    fft(frame, true);
    const size_t off = k * static_cast<size_t>(hop);
    for (int i = 0; i < n; ++i) {
      acc[off + static_cast<size_t>(i)] += frame[static_cast<size_t>(i)].real() * window[static_cast<size_t>(i)];
      wsum[off + static_cast<size_t>(i)] += window[static_cast<size_t>(i)] * window[static_cast<size_t>(i)];
    }
  }

  size_t out_len = spec.source_length;
  if (out_len == 0) {
    out_len = (spec.frames - 1) * static_cast<size_t>(hop);
    if (out_len == 0) out_len = static_cast<size_t>(n) - static_cast<size_t>(pad);
  }

  std::vector<double> out(out_len, 0.0);
  for (size_t i = 0; i < out_len; ++i) {
    const size_t j = i + static_cast<size_t>(pad);
    if (j >= padded_len) break;
    if (wsum[j] < 1e-9) {
      throw NumericError("istft: degenerate window normalization at sample " + std::to_string(i));
    }
    out[i] = acc[j] / wsum[j];
  }

  AudioBuffer buf = AudioBuffer::mono(std::move(out), spec.source_rate > 0 ? spec.source_rate : 24000);
  return buf;
}

MagnitudeSpectrogram magnitude(const ComplexSpectrogram& spec) {
  MagnitudeSpectrogram mag;
  mag.frames = spec.frames;
  mag.bins = spec.bins;
  mag.data.resize(spec.data.size());
  for (size_t i = 0; i < spec.data.size(); ++i) mag.data[i] = std::abs(spec.data[i]);
  return mag;
}

}  // namespace drysep
