#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "drysep/audio_buffer.hpp"

namespace drysep {

enum class WavErrorKind {
  missing_file,
  malformed_header,
  unsupported_encoding,
  malformed_payload,
  unwritable_path,
};

struct WavError : std::runtime_error {
  WavError(WavErrorKind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
  WavErrorKind kind;
};

enum class WavEncoding { pcm16, float32 };

struct WavWriteResult {
  size_t clipped_samples = 0;  // pcm16 samples saturated on write
};

// RIFF/WAVE reader for pcm16 and IEEE float32. Integer samples are scaled
// by 1/32768 so the most negative code maps to -1.0.
AudioBuffer read_wav(const std::string& path);

WavWriteResult write_wav(const std::string& path, const AudioBuffer& buffer,
                         WavEncoding encoding = WavEncoding::float32);

}  // namespace drysep
