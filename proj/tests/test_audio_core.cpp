#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "drysep/audio_buffer.hpp"
#include "drysep/errors.hpp"
#include "drysep/manifest.hpp"
#include "drysep/resample.hpp"
#include "drysep/rng.hpp"
#include "drysep/wav_io.hpp"

using namespace drysep;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path p = fs::temp_directory_path() / "drysep_audio_core_tests";
  fs::create_directories(p);
  return p;
}

// raw pcm16 wav writer independent of write_wav, for exact sample codes
void write_raw_pcm16(const std::string& path, const std::vector<int16_t>& samples, uint32_t rate) {
  std::vector<uint8_t> out;
  auto u32 = [&](uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(uint8_t(v >> (8 * i)));
  };
  auto u16 = [&](uint16_t v) {
    out.push_back(uint8_t(v));
    out.push_back(uint8_t(v >> 8));
  };
  const uint32_t data_size = static_cast<uint32_t>(samples.size() * 2);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  u32(36 + data_size);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  u32(16);
  u16(1);
  u16(1);
  u32(rate);
  u32(rate * 2);
  u16(2);
  u16(16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  u32(data_size);
  for (int16_t s : samples) u16(static_cast<uint16_t>(s));
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

std::vector<double> float_valued_random(size_t n, uint64_t seed, double scale = 0.9) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = static_cast<double>(static_cast<float>(rng.uniform(-scale, scale)));
  return v;
}

}  // namespace

TEST_CASE("read_wav echoes header fields") {
  const auto path = (temp_dir() / "header_echo.wav").string();
  write_raw_pcm16(path, std::vector<int16_t>(24000, 0), 24000);
  const AudioBuffer b = read_wav(path);
  CHECK(b.length() == 24000);
  CHECK(b.sample_rate == 24000);
  CHECK(b.channel_count() == 1);
}

TEST_CASE("pcm16 scaling maps -32768 to -1.0") {
  const auto path = (temp_dir() / "scaling.wav").string();
  write_raw_pcm16(path, {-32768, 0, 16384, 32767}, 24000);
  const AudioBuffer b = read_wav(path);
  CHECK(b.samples()[0] == -1.0);
  CHECK(b.samples()[1] == 0.0);
  CHECK(b.samples()[2] == 0.5);
  CHECK(b.samples()[3] == doctest::Approx(32767.0 / 32768.0));
}

TEST_CASE("wav error kinds are reported distinctly") {
  CHECK_THROWS_WITH_AS(read_wav((temp_dir() / "no_such_file.wav").string()),
                       doctest::Contains("cannot open"), WavError);
  try {
    read_wav((temp_dir() / "no_such_file.wav").string());
  } catch (const WavError& e) {
    CHECK(e.kind == WavErrorKind::missing_file);
  }

  // header claims more payload than present
  const auto valid = (temp_dir() / "full.wav").string();
  write_raw_pcm16(valid, std::vector<int16_t>(1000, 5), 24000);
  std::ifstream in(valid, std::ios::binary);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  bytes.resize(bytes.size() - 100);
  const auto truncated = (temp_dir() / "truncated.wav").string();
  std::ofstream(truncated, std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  try {
    read_wav(truncated);
    FAIL("expected malformed payload error");
  } catch (const WavError& e) {
    CHECK(e.kind == WavErrorKind::malformed_payload);
  }

  // not a RIFF file at all
  const auto garbage = (temp_dir() / "garbage.wav").string();
  std::ofstream(garbage, std::ios::binary) << "definitely not a wav";
  try {
    read_wav(garbage);
    FAIL("expected malformed header error");
  } catch (const WavError& e) {
    CHECK(e.kind == WavErrorKind::malformed_header);
  }

  // 8-bit pcm is not supported
  const auto eightbit = (temp_dir() / "eightbit.wav").string();
  {
    std::ifstream src(valid, std::ios::binary);
    std::vector<char> b((std::istreambuf_iterator<char>(src)), std::istreambuf_iterator<char>());
    b[34] = 8;  // bits-per-sample field
    std::ofstream(eightbit, std::ios::binary).write(b.data(), static_cast<std::streamsize>(b.size()));
  }
  try {
    read_wav(eightbit);
    FAIL("expected unsupported encoding error");
  } catch (const WavError& e) {
    CHECK(e.kind == WavErrorKind::unsupported_encoding);
  }
}

TEST_CASE("float32 round trip is lossless") {
  const auto path = (temp_dir() / "roundtrip_f32.wav").string();
  AudioBuffer b = AudioBuffer::mono(float_valued_random(5000, 42), 24000);
  write_wav(path, b, WavEncoding::float32);
  const AudioBuffer back = read_wav(path);
  REQUIRE(back.length() == b.length());
  CHECK(back.sample_rate == b.sample_rate);
  CHECK(back.channel_count() == 1);
  double max_diff = 0.0;
  for (size_t i = 0; i < b.length(); ++i) {
    max_diff = std::max(max_diff, std::fabs(back.samples()[i] - b.samples()[i]));
  }
  CHECK(max_diff == 0.0);
}

TEST_CASE("pcm16 round trip within one quantization step") {
  const auto path = (temp_dir() / "roundtrip_pcm.wav").string();
  AudioBuffer b = AudioBuffer::mono(float_valued_random(5000, 43), 24000);
  write_wav(path, b, WavEncoding::pcm16);
  const AudioBuffer back = read_wav(path);
  double max_diff = 0.0;
  for (size_t i = 0; i < b.length(); ++i) {
    max_diff = std::max(max_diff, std::fabs(back.samples()[i] - b.samples()[i]));
  }
  CHECK(max_diff <= 1.0 / 32768.0);
}

TEST_CASE("pcm16 write saturates and surfaces clipping") {
  const auto path = (temp_dir() / "clipped.wav").string();
  AudioBuffer b = AudioBuffer::mono({0.0, 1.5, -1.7, 0.25}, 24000);
  const WavWriteResult r = write_wav(path, b, WavEncoding::pcm16);
  CHECK(r.clipped_samples == 2);
  const AudioBuffer back = read_wav(path);
  CHECK(back.samples()[1] == doctest::Approx(32767.0 / 32768.0));
  CHECK(back.samples()[2] == -1.0);
}

TEST_CASE("stereo wav round trip") {
  const auto path = (temp_dir() / "stereo.wav").string();
  AudioBuffer b;
  b.sample_rate = 24000;
  b.channels = {{0.1, 0.2, 0.3}, {-0.1, -0.2, -0.3}};
  write_wav(path, b, WavEncoding::float32);
  const AudioBuffer back = read_wav(path);
  CHECK(back.channel_count() == 2);
  CHECK(back.channels[1][2] == doctest::Approx(-0.3));
}

TEST_CASE("resample length follows the rate ratio") {
  AudioBuffer b = AudioBuffer::mono(float_valued_random(48000, 7), 48000);
  const AudioBuffer out = resample(b, 24000);
  CHECK(out.length() == 24000);
  CHECK(out.sample_rate == 24000);
}

TEST_CASE("same-rate resample is the identity") {
  AudioBuffer b = AudioBuffer::mono(float_valued_random(1000, 8), 24000);
  const AudioBuffer out = resample(b, 24000);
  CHECK(out.samples() == b.samples());
}

TEST_CASE("resample matches the analytic sine above 60 dB") {
  // 1 kHz sine sampled at 44100 and resampled to 24000 vs the same
  // continuous-time sine sampled at 24000 directly
  const double freq = 1000.0;
  const size_t n_in = 44100;
  std::vector<double> x(n_in);
  for (size_t i = 0; i < n_in; ++i) x[i] = std::sin(2.0 * M_PI * freq * i / 44100.0);
  const AudioBuffer out = resample(AudioBuffer::mono(std::move(x), 44100), 24000);

  double sig = 0.0, err = 0.0;
  const size_t guard = 200;
  for (size_t i = guard; i + guard < out.length(); ++i) {
    const double ref = std::sin(2.0 * M_PI * freq * i / 24000.0);
    sig += ref * ref;
    err += (out.samples()[i] - ref) * (out.samples()[i] - ref);
  }
  const double snr_db = 10.0 * std::log10(sig / err);
  CHECK(snr_db > 60.0);
}

TEST_CASE("resample is linear") {
  const auto xa = float_valued_random(4410, 10);
  const auto xb = float_valued_random(4410, 11);
  const double a = 0.7, c = -1.3;
  std::vector<double> combo(xa.size());
  for (size_t i = 0; i < xa.size(); ++i) combo[i] = a * xa[i] + c * xb[i];

  const AudioBuffer ra = resample(AudioBuffer::mono(xa, 44100), 24000);
  const AudioBuffer rb = resample(AudioBuffer::mono(xb, 44100), 24000);
  const AudioBuffer rc = resample(AudioBuffer::mono(combo, 44100), 24000);
  for (size_t i = 0; i < rc.length(); ++i) {
    CHECK(std::fabs(rc.samples()[i] - (a * ra.samples()[i] + c * rb.samples()[i])) < 1e-6);
  }
}

TEST_CASE("resample rejects invalid rates") {
  AudioBuffer b = AudioBuffer::mono({0.0, 0.1}, 24000);
  CHECK_THROWS_AS(resample(b, 0), DataError);
  CHECK_THROWS_AS(resample(b, -100), DataError);
}

TEST_CASE("downmix averages channels") {
  AudioBuffer same;
  same.sample_rate = 24000;
  same.channels = {{0.5, -0.25, 0.125}, {0.5, -0.25, 0.125}};
  CHECK(downmix_mono(same).samples() == same.channels[0]);

  AudioBuffer opposite;
  opposite.sample_rate = 24000;
  opposite.channels = {{0.5, -0.25}, {-0.5, 0.25}};
  for (double v : downmix_mono(opposite).samples()) CHECK(v == 0.0);

  AudioBuffer mono = AudioBuffer::mono({0.1, 0.2}, 24000);
  CHECK(downmix_mono(mono).samples() == mono.samples());
}

TEST_CASE("downmix preserves the DC mean") {
  Rng rng(99);
  AudioBuffer b;
  b.sample_rate = 24000;
  b.channels.resize(3, std::vector<double>(500));
  double channel_mean_sum = 0.0;
  for (auto& ch : b.channels) {
    double m = 0.0;
    for (auto& v : ch) {
      v = rng.uniform(-1.0, 1.0);
      m += v;
    }
    channel_mean_sum += m / 500.0;
  }
  const AudioBuffer out = downmix_mono(b);
  double mean = 0.0;
  for (double v : out.samples()) mean += v;
  mean /= 500.0;
  CHECK(mean == doctest::Approx(channel_mean_sum / 3.0).epsilon(1e-12));
}

TEST_CASE("manifest parses valid records") {
  const auto path = (temp_dir() / "manifest.tsv").string();
  std::ofstream(path) << "v0.wav\ts0.wav\ttrain\ta0.wav\tb0.wav\n"
                      << "v1.wav\t-\tvalid\ta1.wav\n"
                      << "v2.wav\ts2.wav\ttest\ta2.wav\n";
  const DatasetManifest m = load_manifest(path);
  REQUIRE(m.entries.size() == 3);
  CHECK(m.entries[0].split == Split::train);
  CHECK(m.entries[0].accompaniment_paths.size() == 2);
  CHECK_FALSE(m.entries[1].has_srir());
  CHECK(m.entries[2].has_srir());
  CHECK(m.count(Split::train) == 1);
  // relative paths resolve against the manifest directory
  CHECK(m.entries[0].voice_path == (temp_dir() / "v0.wav").string());
}

TEST_CASE("manifest rejects unknown split naming the line") {
  const auto path = (temp_dir() / "manifest_bad.tsv").string();
  std::ofstream(path) << "v0.wav\t-\ttrain\ta0.wav\n"
                      << "v1.wav\t-\tdev\ta1.wav\n";
  CHECK_THROWS_WITH_AS(load_manifest(path), doctest::Contains("line 2"), DataError);
  CHECK_THROWS_WITH_AS(load_manifest(path), doctest::Contains("dev"), DataError);
}

TEST_CASE("empty manifest is valid") {
  const auto path = (temp_dir() / "manifest_empty.tsv").string();
  std::ofstream(path) << "";
  CHECK(load_manifest(path).entries.empty());
}

TEST_CASE("manifest requires at least four fields") {
  const auto path = (temp_dir() / "manifest_short.tsv").string();
  std::ofstream(path) << "v0.wav\t-\ttrain\n";
  CHECK_THROWS_WITH_AS(load_manifest(path), doctest::Contains("line 1"), DataError);
}

TEST_CASE("manifest round trips through save") {
  const auto path = (temp_dir() / "manifest_rt.tsv").string();
  DatasetManifest m;
  ManifestEntry e;
  e.voice_path = "voice.wav";
  e.split = Split::test;
  e.accompaniment_paths = {"a.wav", "b.wav"};
  m.entries.push_back(e);
  save_manifest(path, m);
  const DatasetManifest back = load_manifest(path);
  REQUIRE(back.entries.size() == 1);
  CHECK_FALSE(back.entries[0].has_srir());
  CHECK(back.entries[0].accompaniment_paths.size() == 2);
}

TEST_CASE("audio buffer validation catches malformed buffers") {
  AudioBuffer ragged;
  ragged.sample_rate = 24000;
  ragged.channels = {{0.0, 0.1}, {0.0}};
  CHECK_THROWS_AS(ragged.validate(), DataError);

  AudioBuffer nonfinite = AudioBuffer::mono({0.0, std::nan("")}, 24000);
  CHECK_THROWS_AS(nonfinite.validate(), DataError);

  AudioBuffer bad_rate = AudioBuffer::mono({0.0}, 0);
  CHECK_THROWS_AS(bad_rate.validate(), DataError);
}
