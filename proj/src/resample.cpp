#include "drysep/resample.hpp"

#include <cmath>
#include <numeric>
#include <vector>

#include "drysep/errors.hpp"

namespace drysep {

namespace {

constexpr int kTapsPerPhase = 64;
constexpr double kKaiserBeta = 9.0;
constexpr double kCutoffFraction = 0.95;

double bessel_i0(double x) {
  // power series; converges quickly for the beta values used here
  double sum = 1.0, term = 1.0;
  for (int k = 1; k < 64; ++k) {
    term *= (x / (2.0 * k)) * (x / (2.0 * k));
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return sum;
}

double sinc(double x) {
  if (std::fabs(x) < 1e-12) return 1.0;
  return std::sin(M_PI * x) / (M_PI * x);
}

// Prototype lowpass of length 64*L + 1 (odd, so the group delay lands on an
// integer sample of the upsampled grid). Normalized so the total sum is L.
std::vector<double> design_prototype(long long up, double cutoff) {
  const long long n = kTapsPerPhase * up + 1;
  const long long center = (n - 1) / 2;
  std::vector<double> h(static_cast<size_t>(n));
  const double i0_beta = bessel_i0(kKaiserBeta);
  double sum = 0.0;
  for (long long j = 0; j < n; ++j) {
    const double t = static_cast<double>(j - center);
    const double frac = 2.0 * static_cast<double>(j) / static_cast<double>(n - 1) - 1.0;
    const double win = bessel_i0(kKaiserBeta * std::sqrt(std::max(0.0, 1.0 - frac * frac))) / i0_beta;
    h[static_cast<size_t>(j)] = 2.0 * cutoff * sinc(2.0 * cutoff * t) * win;
    sum += h[static_cast<size_t>(j)];
  }
  const double gain = static_cast<double>(up) / sum;
  for (double& v : h) v *= gain;
  return h;
}

}  // namespace

AudioBuffer resample(const AudioBuffer& buffer, int target_rate) {
  if (target_rate <= 0) throw DataError("resample: target rate must be positive");
  if (buffer.sample_rate <= 0) throw DataError("resample: source rate must be positive");
  if (buffer.sample_rate == target_rate) return buffer;

  const long long g = std::gcd<long long>(buffer.sample_rate, target_rate);
  const long long up = target_rate / g;     // L
  const long long down = buffer.sample_rate / g;  // M

  // Cutoff in cycles per upsampled sample: 0.95 * min(src, dst) / 2 scaled
  // by the upsampled rate src*L.
  const double cutoff = kCutoffFraction * std::min(1.0, double(up) / double(down)) / (2.0 * double(up));
  const std::vector<double> h = design_prototype(up, cutoff);
  const long long n_taps = static_cast<long long>(h.size());

  AudioBuffer out;
  out.sample_rate = target_rate;
  const long long in_len = static_cast<long long>(buffer.length());
  const long long out_len =
      std::llround(static_cast<double>(in_len) * target_rate / buffer.sample_rate);

  for (const auto& ch : buffer.channels) {
    std::vector<double> y(static_cast<size_t>(out_len), 0.0);
    for (long long nout = 0; nout < out_len; ++nout) {
      const long long u = nout * down;            // position on the upsampled grid
      const long long r = u % up;                 // polyphase index
      const long long i0 = u / up + kTapsPerPhase / 2;  // center-compensated input index
      double acc = 0.0;
      for (long long j = r, p = 0; j < n_taps; j += up, ++p) {
        const long long idx = i0 - p;
        if (idx >= 0 && idx < in_len) acc += h[static_cast<size_t>(j)] * ch[static_cast<size_t>(idx)];
      }
      y[static_cast<size_t>(nout)] = acc;
    }
    out.channels.push_back(std::move(y));
  }
  return out;
}

}  // namespace drysep
