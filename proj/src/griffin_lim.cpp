#include "drysep/griffin_lim.hpp"

#include <cmath>
#include <complex>

#include "drysep/errors.hpp"
#include "drysep/rng.hpp"

namespace drysep {

namespace {

ComplexSpectrogram with_magnitude(const MagnitudeSpectrogram& mag,
                                  const ComplexSpectrogram& phase_source) {
  ComplexSpectrogram out = phase_source;
  for (size_t i = 0; i < out.data.size(); ++i) {
    const double m = std::abs(out.data[i]);
    out.data[i] = m > 0.0 ? out.data[i] * (mag.data[i] / m)
                          : std::complex<double>(mag.data[i], 0.0);
  }
  return out;
}

}  // namespace

AudioBuffer griffin_lim(const MagnitudeSpectrogram& mag, const StftParams& params,
                        int sample_rate, int iterations, uint64_t seed) {
  params.validate();
  if (iterations < 1) throw ConfigError("griffin_lim: iterations must be >= 1");
  if (mag.frames == 0 || mag.bins != static_cast<size_t>(params.bins())) {
    throw DataError("griffin_lim: magnitude shape inconsistent with params");
  }

  Rng rng(seed);
  ComplexSpectrogram spec;
  spec.frames = mag.frames;
  spec.bins = mag.bins;
  spec.params = params;
  spec.source_rate = sample_rate;
  spec.source_length = (mag.frames - 1) * static_cast<size_t>(params.hop);
  spec.data.resize(mag.data.size());
  for (size_t i = 0; i < mag.data.size(); ++i) {
    const double phase = rng.uniform(0.0, 2.0 * M_PI);
    spec.data[i] = std::polar(mag.data[i], phase);
  }

  AudioBuffer x;
  for (int it = 0; it < iterations; ++it) {
    x = istft(spec);
    if (it + 1 == iterations) break;
    ComplexSpectrogram estimate = stft(x, params);
    estimate.source_length = spec.source_length;
    spec = with_magnitude(mag, estimate);
  }
  return x;
}

double spectral_convergence(const AudioBuffer& x, const MagnitudeSpectrogram& mag,
                            const StftParams& params) {
  const MagnitudeSpectrogram est = magnitude(stft(x, params));
  const size_t n = std::min(est.data.size(), mag.data.size());
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = est.data[i] - mag.data[i];
    num += d * d;
    den += mag.data[i] * mag.data[i];
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : HUGE_VAL;
  return std::sqrt(num / den);
}

}  // namespace drysep
