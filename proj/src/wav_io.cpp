#include "drysep/wav_io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace drysep {

namespace {

uint32_t read_u32(const uint8_t* p) {
  return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 | uint32_t(p[3]) << 24;
}
uint16_t read_u16(const uint8_t* p) { return uint16_t(p[0]) | uint16_t(p[1]) << 8; }

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(uint8_t(v));
  out.push_back(uint8_t(v >> 8));
  out.push_back(uint8_t(v >> 16));
  out.push_back(uint8_t(v >> 24));
}
void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(uint8_t(v));
  out.push_back(uint8_t(v >> 8));
}

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;

}  // namespace

AudioBuffer read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw WavError(WavErrorKind::missing_file, "cannot open wav file: " + path);
  std::vector<uint8_t> data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  if (data.size() < 12 || std::memcmp(data.data(), "RIFF", 4) != 0 ||
      std::memcmp(data.data() + 8, "WAVE", 4) != 0) {
    throw WavError(WavErrorKind::malformed_header, "not a RIFF/WAVE file: " + path);
  }

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  bool have_fmt = false;
  const uint8_t* payload = nullptr;
  uint32_t payload_size = 0;

  size_t pos = 12;
  while (pos + 8 <= data.size()) {
    const uint8_t* chunk = data.data() + pos;
    uint32_t size = read_u32(chunk + 4);
    const size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + 16 > data.size()) {
        throw WavError(WavErrorKind::malformed_header, "truncated fmt chunk: " + path);
      }
      format = read_u16(data.data() + body);
      channels = read_u16(data.data() + body + 2);
      rate = read_u32(data.data() + body + 4);
      bits = read_u16(data.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      payload = data.data() + body;
      payload_size = size;
      if (body + size > data.size()) {
        throw WavError(WavErrorKind::malformed_payload,
                       "data chunk claims more bytes than the file holds: " + path);
      }
    }
    pos = body + size + (size & 1);  // chunks are word-aligned
  }

  if (!have_fmt || payload == nullptr) {
    throw WavError(WavErrorKind::malformed_header, "missing fmt or data chunk: " + path);
  }
  if (channels == 0 || rate == 0) {
    throw WavError(WavErrorKind::malformed_header, "fmt chunk has zero channels or rate: " + path);
  }
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool f32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !f32) {
    throw WavError(WavErrorKind::unsupported_encoding,
                   "unsupported wav encoding (format=" + std::to_string(format) +
                       ", bits=" + std::to_string(bits) + "): " + path);
  }

  const size_t bytes_per_sample = pcm16 ? 2 : 4;
  const size_t block = bytes_per_sample * channels;
  if (payload_size % block != 0) {
    throw WavError(WavErrorKind::malformed_payload, "data chunk not frame-aligned: " + path);
  }
  const size_t frames = payload_size / block;

  AudioBuffer out;
  out.sample_rate = static_cast<int>(rate);
  out.channels.assign(channels, std::vector<double>(frames));
  for (size_t i = 0; i < frames; ++i) {
    for (uint16_t c = 0; c < channels; ++c) {
      const uint8_t* s = payload + (i * channels + c) * bytes_per_sample;
      if (pcm16) {
        int16_t v = static_cast<int16_t>(read_u16(s));
        out.channels[c][i] = static_cast<double>(v) / 32768.0;
      } else {
        uint32_t u = read_u32(s);
        float v;
        std::memcpy(&v, &u, 4);
        out.channels[c][i] = static_cast<double>(v);
      }
    }
  }
  return out;
}

WavWriteResult write_wav(const std::string& path, const AudioBuffer& buffer,
                         WavEncoding encoding) {
  buffer.validate();
  const uint16_t channels = static_cast<uint16_t>(buffer.channel_count());
  const size_t frames = buffer.length();
  const bool pcm16 = encoding == WavEncoding::pcm16;
  const uint16_t bits = pcm16 ? 16 : 32;
  const uint32_t bytes_per_sample = bits / 8;
  const uint32_t block = bytes_per_sample * channels;
  const uint32_t data_size = static_cast<uint32_t>(frames * block);

  std::vector<uint8_t> out;
  out.reserve(44 + data_size);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_size);
  out.insert(out.end(), {'W', 'A', 'V', 'E'});
  out.insert(out.end(), {'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, pcm16 ? kFormatPcm : kFormatFloat);
  put_u16(out, channels);
  put_u32(out, static_cast<uint32_t>(buffer.sample_rate));
  put_u32(out, static_cast<uint32_t>(buffer.sample_rate) * block);
  put_u16(out, static_cast<uint16_t>(block));
  put_u16(out, bits);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_size);

  WavWriteResult result;
  for (size_t i = 0; i < frames; ++i) {
    for (uint16_t c = 0; c < channels; ++c) {
      const double v = buffer.channels[c][i];
      if (pcm16) {
        double scaled = std::round(v * 32768.0);
        if (scaled > 32767.0) {
          scaled = 32767.0;
          ++result.clipped_samples;
        } else if (scaled < -32768.0) {
          scaled = -32768.0;
          ++result.clipped_samples;
        }
        put_u16(out, static_cast<uint16_t>(static_cast<int16_t>(scaled)));
      } else {
        float fv = static_cast<float>(v);
        uint32_t u;
        std::memcpy(&u, &fv, 4);
        put_u32(out, u);
      }
    }
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw WavError(WavErrorKind::unwritable_path, "cannot open for writing: " + path);
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw WavError(WavErrorKind::unwritable_path, "short write: " + path);
  return result;
}

}  // namespace drysep
