#include "drysep/mixing.hpp"

#include <cmath>

#include "drysep/errors.hpp"
#include "drysep/fft.hpp"

namespace drysep {

Srir Srir::from_buffer(AudioBuffer buffer, std::string identifier) {
  buffer.validate();
  AudioBuffer mono = downmix_mono(buffer);
  const double peak = peak_abs(mono);
  if (mono.length() == 0 || peak <= 0.0) throw DataError("srir '" + identifier + "' is empty or silent");
  for (double& v : mono.samples()) v /= peak;
  return Srir{std::move(mono), std::move(identifier)};
}

void ReverbSpec::validate() const {
  if (srir == nullptr) throw DataError("reverb spec: missing srir");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DataError("reverb spec: alpha outside [0, 1]");
}

AudioBuffer render_reverb(const AudioBuffer& dry, const ReverbSpec& spec) {
  spec.validate();
  if (!dry.is_mono()) throw DataError("render_reverb: expected mono dry signal");
  if (dry.sample_rate != spec.srir->impulse.sample_rate) {
    throw DataError("render_reverb: sample-rate mismatch (dry " +
                    std::to_string(dry.sample_rate) + " Hz, srir " +
                    std::to_string(spec.srir->impulse.sample_rate) + " Hz); resample the srir first");
  }

  const size_t n = dry.length();
  AudioBuffer wet = AudioBuffer::silence(n, dry.sample_rate);
  if (spec.alpha == 0.0 || n == 0) return wet;

  const std::vector<double> full = fft_convolve(dry.samples(), spec.srir->impulse.samples());
  for (size_t i = 0; i < n; ++i) wet.samples()[i] = spec.alpha * full[i];
  return wet;
}

AudioBuffer mix(const AudioBuffer& x_d, const AudioBuffer& x_r, const AudioBuffer& x_a) {
  if (x_d.length() != x_r.length() || x_d.length() != x_a.length()) {
    throw DataError("mix: length mismatch (" + std::to_string(x_d.length()) + ", " +
                    std::to_string(x_r.length()) + ", " + std::to_string(x_a.length()) + ")");
  }
  if (x_d.sample_rate != x_r.sample_rate || x_d.sample_rate != x_a.sample_rate) {
    throw DataError("mix: sample-rate mismatch");
  }
  AudioBuffer y = AudioBuffer::silence(x_d.length(), x_d.sample_rate);
  for (size_t i = 0; i < y.length(); ++i) {
    y.samples()[i] = x_d.samples()[i] + x_r.samples()[i] + x_a.samples()[i];
  }
  return y;
}

SegmentResult segment_random(const std::vector<AudioBuffer>& buffers, double seconds, Rng& rng) {
  if (buffers.empty()) throw DataError("segment_random: no buffers");
  const int rate = buffers[0].sample_rate;
  size_t min_len = buffers[0].length();
  for (const auto& b : buffers) {
    if (b.sample_rate != rate) throw DataError("segment_random: sample-rate mismatch");
    min_len = std::min(min_len, b.length());
  }
  const size_t seg = static_cast<size_t>(std::llround(seconds * rate));
  if (seg == 0) throw DataError("segment_random: zero-length segment");

  SegmentResult result;
  result.padded = min_len < seg;
  result.offset = min_len > seg ? rng.uniform_index(min_len - seg + 1) : 0;
  for (const auto& b : buffers) {
    std::vector<double> cut(seg, 0.0);
    const size_t avail = b.length() > result.offset ? b.length() - result.offset : 0;
    const size_t n = std::min(seg, avail);
    for (size_t i = 0; i < n; ++i) cut[i] = b.samples()[result.offset + i];
    result.buffers.push_back(AudioBuffer::mono(std::move(cut), rate));
  }
  return result;
}

AugmentedExample mix_audio_augment(const AudioBuffer& voice, const AudioBuffer& acc1,
                                   const AudioBuffer& acc2, const ReverbSpec& spec) {
  if (voice.length() != acc1.length() || voice.length() != acc2.length()) {
    throw DataError("mix_audio_augment: stem length mismatch");
  }
  AugmentedExample ex;
  ex.dry = voice;
  ex.alpha = spec.alpha;
  const AudioBuffer wet = render_reverb(voice, spec);
  const AudioBuffer acc = mix(acc1, acc2, AudioBuffer::silence(acc1.length(), acc1.sample_rate));
  ex.mixture = mix(ex.dry, wet, acc);
  return ex;
}

AugmentedExample mix_audio_augment(const AudioBuffer& voice, const AudioBuffer& acc1,
                                   const AudioBuffer& acc2, const Srir& srir, Rng& rng) {
  ReverbSpec spec;
  spec.srir = &srir;
  spec.alpha = rng.uniform();
  return mix_audio_augment(voice, acc1, acc2, spec);
}

}  // namespace drysep
