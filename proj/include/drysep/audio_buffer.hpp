#pragma once

#include <cstddef>
#include <vector>

namespace drysep {

// Time-domain signal. Channels are stored separately and must have equal
// length. Samples are dimensionless amplitudes, nominally in [-1, 1] but not
// clamped (augmented mixtures may exceed the nominal range).
struct AudioBuffer {
  std::vector<std::vector<double>> channels;
  int sample_rate = 0;

  AudioBuffer() = default;
  AudioBuffer(std::vector<std::vector<double>> ch, int rate)
      : channels(std::move(ch)), sample_rate(rate) {}

  static AudioBuffer mono(std::vector<double> samples, int rate) {
    AudioBuffer b;
    b.channels.push_back(std::move(samples));
    b.sample_rate = rate;
    return b;
  }

  static AudioBuffer silence(size_t length, int rate) {
    return mono(std::vector<double>(length, 0.0), rate);
  }

  size_t length() const { return channels.empty() ? 0 : channels[0].size(); }
  int channel_count() const { return static_cast<int>(channels.size()); }

  bool is_mono() const { return channels.size() == 1; }
  const std::vector<double>& samples() const { return channels.at(0); }
  std::vector<double>& samples() { return channels.at(0); }

  // Throws DataError if channel lengths differ, the rate is non-positive,
  // or any sample is non-finite.
  void validate() const;
};

// Single channel equal to the arithmetic mean across channels.
AudioBuffer downmix_mono(const AudioBuffer& buffer);

double peak_abs(const AudioBuffer& buffer);
double rms(const AudioBuffer& buffer);

}  // namespace drysep
