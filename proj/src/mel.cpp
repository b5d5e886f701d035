#include "drysep/mel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "drysep/errors.hpp"

namespace drysep {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

void NormStats::validate() const {
  if (!(min < max)) throw ConfigError("norm stats: require min < max");
}

MelFilterbank build_mel_filterbank(int n_mels, int fft_size, int sample_rate,
                                   double fmin, double fmax) {
  if (n_mels <= 0) throw ConfigError("mel filterbank: n_mels must be positive");
  if (fmin < 0.0 || fmax <= fmin) throw ConfigError("mel filterbank: require 0 <= fmin < fmax");
  if (fmax > sample_rate / 2.0) throw ConfigError("mel filterbank: fmax above Nyquist");

  const size_t n_bins = static_cast<size_t>(fft_size / 2 + 1);
  const double mel_lo = hz_to_mel(fmin);
  const double mel_hi = hz_to_mel(fmax);

  // n_mels + 2 band edges, uniform on the mel scale
  std::vector<double> edges(static_cast<size_t>(n_mels) + 2);
  for (size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                      static_cast<double>(n_mels + 1));
  }

  MelFilterbank fb;
  fb.n_mels = static_cast<size_t>(n_mels);
  fb.n_bins = n_bins;
  fb.weights.assign(fb.n_mels * n_bins, 0.0);
  fb.fmin = fmin;
  fb.fmax = fmax;
  fb.sample_rate = sample_rate;

  const double bin_hz = static_cast<double>(sample_rate) / fft_size;
  for (size_t m = 0; m < fb.n_mels; ++m) {
    const double lo = edges[m], center = edges[m + 1], hi = edges[m + 2];
    fb.center_hz.push_back(center);
    const double area_norm = 2.0 / (hi - lo);
    double row_sum = 0.0;
    size_t first = n_bins, end = 0;
    for (size_t f = 0; f < n_bins; ++f) {
      const double hz = bin_hz * static_cast<double>(f);
      double w = 0.0;
      if (hz > lo && hz < center) {
        w = (hz - lo) / (center - lo);
      } else if (hz >= center && hz < hi) {
        w = (hi - hz) / (hi - center);
      }
      fb.weights[m * n_bins + f] = w * area_norm;
      if (w > 0.0) {
        first = std::min(first, f);
        end = f + 1;
      }
      row_sum += w;
    }
    if (row_sum <= 0.0) {
      throw ConfigError("mel filterbank: filter " + std::to_string(m) +
                        " has no positive weight (increase fft_size or n_mels range)");
    }
    fb.support.push_back({first, end});
  }
  return fb;
}

MelSpectrogram to_mel(const MagnitudeSpectrogram& mag, const MelFilterbank& fb) {
  if (mag.bins != fb.n_bins) {
    throw DataError("to_mel: spectrogram has " + std::to_string(mag.bins) +
                    " bins but filterbank expects " + std::to_string(fb.n_bins));
  }
  MelSpectrogram mel;
  mel.frames = mag.frames;
  mel.n_mels = fb.n_mels;
  mel.stage = MelStage::linear;
  mel.data.assign(mag.frames * fb.n_mels, 0.0);
  for (size_t t = 0; t < mag.frames; ++t) {
    const double* row = &mag.data[t * mag.bins];
    for (size_t m = 0; m < fb.n_mels; ++m) {
      const double* w = &fb.weights[m * fb.n_bins];
      const auto [first, end] = fb.support[m];
      double acc = 0.0;
      for (size_t f = first; f < end; ++f) acc += row[f] * w[f];
      mel.at(t, m) = acc;
    }
  }
  return mel;
}

MelSpectrogram log_compress(const MelSpectrogram& mel, double eps) {
  if (mel.stage != MelStage::linear) throw DataError("log_compress: expected linear-stage mel");
  MelSpectrogram out = mel;
  out.stage = MelStage::log;
  for (double& v : out.data) v = std::log(std::max(v, eps));
  return out;
}

MelSpectrogram log_decompress(const MelSpectrogram& mel) {
  if (mel.stage != MelStage::log) throw DataError("log_decompress: expected log-stage mel");
  MelSpectrogram out = mel;
  out.stage = MelStage::linear;
  for (double& v : out.data) v = std::exp(v);
  return out;
}

MelSpectrogram minmax_normalize(const MelSpectrogram& mel, const NormStats& stats) {
  if (mel.stage != MelStage::log) throw DataError("minmax_normalize: expected log-stage mel");
  stats.validate();
  MelSpectrogram out = mel;
  out.stage = MelStage::normalized;
  const double scale = 1.0 / (stats.max - stats.min);
  for (double& v : out.data) v = std::clamp((v - stats.min) * scale, 0.0, 1.0);
  return out;
}

MelSpectrogram minmax_denormalize(const MelSpectrogram& mel, const NormStats& stats) {
  if (mel.stage != MelStage::normalized) {
    throw DataError("minmax_denormalize: expected normalized-stage mel");
  }
  stats.validate();
  MelSpectrogram out = mel;
  out.stage = MelStage::log;
  for (double& v : out.data) v = stats.min + v * (stats.max - stats.min);
  return out;
}

NormStats norm_stats_from(const std::vector<MelSpectrogram>& log_mels) {
  bool any = false;
  NormStats stats{0.0, 0.0};
  for (const auto& mel : log_mels) {
    if (mel.stage != MelStage::log) throw DataError("norm stats: expected log-stage mels");
    for (double v : mel.data) {
      if (!any) {
        stats.min = stats.max = v;
        any = true;
      } else {
        stats.min = std::min(stats.min, v);
        stats.max = std::max(stats.max, v);
      }
    }
  }
  if (!any) throw DataError("norm stats: empty corpus");
  if (stats.min == stats.max) {
    throw DataError("norm stats: corpus holds a single distinct value; need at least two");
  }
  return stats;
}

MelInverter::MelInverter(const MelFilterbank& fb) : n_mels_(fb.n_mels), n_bins_(fb.n_bins) {
  // gram = W W^T (M x M), SPD when the filters are independent
  const size_t m = n_mels_, f = n_bins_;
  std::vector<double> gram(m * m, 0.0);
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = i; j < m; ++j) {
      double acc = 0.0;
      const double* wi = &fb.weights[i * f];
      const double* wj = &fb.weights[j * f];
      for (size_t k = 0; k < f; ++k) acc += wi[k] * wj[k];
      gram[i * m + j] = acc;
      gram[j * m + i] = acc;
    }
  }

  // Cholesky factorization gram = L L^T
  std::vector<double> chol(m * m, 0.0);
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = 0; j <= i; ++j) {
      double acc = gram[i * m + j];
      for (size_t k = 0; k < j; ++k) acc -= chol[i * m + k] * chol[j * m + k];
      if (i == j) {
        if (acc <= 0.0) throw NumericError("mel inversion: filterbank gram matrix not SPD");
        chol[i * m + i] = std::sqrt(acc);
      } else {
        chol[i * m + j] = acc / chol[j * m + j];
      }
    }
  }

  // pinv row r solves gram * p_r = w_r for each frequency column; done as
  // M solves with F right-hand sides packed column-wise.
  pinv_.assign(m * f, 0.0);
  std::vector<double> y(m), x(m);
  for (size_t col = 0; col < f; ++col) {
    for (size_t i = 0; i < m; ++i) {
      double acc = fb.weights[i * f + col];
      for (size_t k = 0; k < i; ++k) acc -= chol[i * m + k] * y[k];
      y[i] = acc / chol[i * m + i];
    }
    for (size_t ii = m; ii-- > 0;) {
      double acc = y[ii];
      for (size_t k = ii + 1; k < m; ++k) acc -= chol[k * m + ii] * x[k];
      x[ii] = acc / chol[ii * m + ii];
    }
    for (size_t i = 0; i < m; ++i) pinv_[i * f + col] = x[i];
  }
}

MagnitudeSpectrogram MelInverter::invert(const MelSpectrogram& mel) const {
  if (mel.stage != MelStage::linear) throw DataError("mel_to_linear: expected linear-stage mel");
  if (mel.n_mels != n_mels_) throw DataError("mel_to_linear: mel band count mismatch");
  MagnitudeSpectrogram mag;
  mag.frames = mel.frames;
  mag.bins = n_bins_;
  mag.data.assign(mel.frames * n_bins_, 0.0);
  for (size_t t = 0; t < mel.frames; ++t) {
    double* out = &mag.data[t * n_bins_];
    for (size_t m = 0; m < n_mels_; ++m) {
      const double v = mel.at(t, m);
      if (v == 0.0) continue;
      const double* p = &pinv_[m * n_bins_];
      for (size_t f = 0; f < n_bins_; ++f) out[f] += v * p[f];
    }
    for (size_t f = 0; f < n_bins_; ++f) out[f] = std::max(out[f], 0.0);
  }
  return mag;
}

MagnitudeSpectrogram mel_to_linear(const MelSpectrogram& mel, const MelFilterbank& fb) {
  return MelInverter(fb).invert(mel);
}

}  // namespace drysep
