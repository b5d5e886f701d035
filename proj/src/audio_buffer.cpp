#include "drysep/audio_buffer.hpp"

#include <cmath>

#include "drysep/errors.hpp"

namespace drysep {

void AudioBuffer::validate() const {
  if (sample_rate <= 0) throw DataError("audio buffer: sample rate must be positive");
  if (channels.empty()) throw DataError("audio buffer: no channels");
  const size_t n = channels[0].size();
  for (const auto& ch : channels) {
    if (ch.size() != n) throw DataError("audio buffer: channel lengths differ");
    for (double v : ch) {
      if (!std::isfinite(v)) throw DataError("audio buffer: non-finite sample");
    }
  }
}

AudioBuffer downmix_mono(const AudioBuffer& buffer) {
  if (buffer.channels.empty()) throw DataError("downmix: empty buffer");
  if (buffer.is_mono()) return buffer;
  const size_t n = buffer.length();
  const double scale = 1.0 / buffer.channel_count();
  std::vector<double> out(n, 0.0);
  for (const auto& ch : buffer.channels) {
    for (size_t i = 0; i < n; ++i) out[i] += ch[i];
  }
  for (double& v : out) v *= scale;
  return AudioBuffer::mono(std::move(out), buffer.sample_rate);
}

double peak_abs(const AudioBuffer& buffer) {
  double peak = 0.0;
  for (const auto& ch : buffer.channels) {
    for (double v : ch) peak = std::max(peak, std::fabs(v));
  }
  return peak;
}

double rms(const AudioBuffer& buffer) {
  double acc = 0.0;
  size_t count = 0;
  for (const auto& ch : buffer.channels) {
    for (double v : ch) acc += v * v;
    count += ch.size();
  }
  return count == 0 ? 0.0 : std::sqrt(acc / static_cast<double>(count));
}

}  // namespace drysep
