#include "drysep/pipeline/fixtures.hpp"

#include <cmath>
#include <filesystem>

#include "drysep/errors.hpp"
#include "drysep/wav_io.hpp"

namespace fs = std::filesystem;

namespace drysep::pipeline {

namespace {

constexpr uint64_t kFixtureStream = 41;

// cosine-squared attack/release ramps keep envelope edges click-free
void apply_ramp(std::vector<double>& env, size_t start, size_t end, size_t ramp, bool rising) {
  const size_t n = std::min(ramp, end - start);
  for (size_t i = 0; i < n; ++i) {
    const double x = std::sin(0.5 * M_PI * static_cast<double>(i) / static_cast<double>(n));
    const double g = x * x;
    env[start + i] *= rising ? g : 1.0 - g;
  }
}

}  // namespace

AudioBuffer synth_voice_clip(const FixtureSpec& spec, int sample_rate, Rng& rng) {
  const size_t n = static_cast<size_t>(std::llround(spec.clip_seconds * sample_rate));
  std::vector<double> out(n, 0.0);

  const double f0 = std::exp(rng.uniform(std::log(spec.f0_min), std::log(spec.f0_max)));
  const double vib_rate = rng.uniform(4.5, 6.5);
  const double vib_depth = rng.uniform(0.01, 0.025);

  // voiced/silent alternation (always at least one gap per clip)
  std::vector<double> env(n, 0.0);
  size_t pos = static_cast<size_t>(rng.uniform(0.0, 0.2) * sample_rate);
  bool voiced = true;
  const size_t ramp = static_cast<size_t>(0.02 * sample_rate);
  while (pos < n) {
    const double dur = voiced ? rng.uniform(0.5, 1.2) : rng.uniform(0.3, 0.8);
    const size_t seg = std::min(n - pos, static_cast<size_t>(dur * sample_rate));
    if (voiced) {
      for (size_t i = pos; i < pos + seg; ++i) env[i] = 1.0;
      apply_ramp(env, pos, pos + seg, ramp, true);
      if (pos + seg < n) {
        const size_t rel = pos + seg - std::min(seg, ramp);
        apply_ramp(env, rel, pos + seg, ramp, false);
      }
    }
    pos += seg;
    voiced = !voiced;
  }

  const int harmonics = std::max(1, std::min(10, static_cast<int>(8000.0 / f0)));
  std::vector<double> amp(static_cast<size_t>(harmonics));
  double amp_sum = 0.0;
  for (int k = 0; k < harmonics; ++k) {
    amp[static_cast<size_t>(k)] = 1.0 / std::pow(k + 1.0, 1.2);
    amp_sum += amp[static_cast<size_t>(k)];
  }
  const double scale = 0.45 / amp_sum;

  double phase = rng.uniform(0.0, 2.0 * M_PI);
  for (size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    const double f = f0 * (1.0 + vib_depth * std::sin(2.0 * M_PI * vib_rate * t));
    phase += 2.0 * M_PI * f / sample_rate;
    if (env[i] == 0.0) continue;
    double v = 0.0;
    for (int k = 0; k < harmonics; ++k) {
      v += amp[static_cast<size_t>(k)] * std::sin((k + 1.0) * phase);
    }
    out[i] = scale * env[i] * v;
  }
  return AudioBuffer::mono(std::move(out), sample_rate);
}

AudioBuffer synth_accompaniment_clip(const FixtureSpec& spec, int sample_rate, Rng& rng) {
  const size_t n = static_cast<size_t>(std::llround(spec.clip_seconds * sample_rate));
  std::vector<double> out(n, 0.0);

  // colored noise bed
  const double pole = rng.uniform(0.92, 0.985);
  double state = 0.0;
  for (size_t i = 0; i < n; ++i) {
    state = pole * state + (1.0 - pole) * (rng.uniform() * 2.0 - 1.0);
    out[i] = state;
  }
  double peak = 1e-12;
  for (double v : out) peak = std::max(peak, std::fabs(v));
  const double bed_gain = 0.28 / peak;
  for (double& v : out) v *= bed_gain;

  // percussive clicks: short decaying noise bursts
  double t = rng.uniform(0.05, 0.4);
  while (t < spec.clip_seconds) {
    const size_t start = static_cast<size_t>(t * sample_rate);
    const double decay = rng.uniform(0.02, 0.06);
    const double amp = rng.uniform(0.15, 0.35);
    const size_t len = std::min(n - start, static_cast<size_t>(3.0 * decay * sample_rate));
    for (size_t i = 0; i < len; ++i) {
      const double e = std::exp(-static_cast<double>(i) / (decay * sample_rate));
      out[start + i] += amp * e * (rng.uniform() * 2.0 - 1.0);
    }
    t += rng.uniform(0.25, 0.7);
  }
  return AudioBuffer::mono(std::move(out), sample_rate);
}

AudioBuffer synth_srir(const FixtureSpec& spec, int sample_rate, Rng& rng) {
  const double rt60 = rng.uniform(spec.rt60_min, spec.rt60_max);
  const size_t n = static_cast<size_t>(rt60 * sample_rate);
  std::vector<double> h(n, 0.0);
  h[0] = 1.0;  // direct path
  const double tail_gain = rng.uniform(0.25, 0.6);
  for (size_t i = 1; i < n; ++i) {
    // 60 dB down at rt60
    const double env = std::pow(10.0, -3.0 * static_cast<double>(i) / static_cast<double>(n));
    h[i] = tail_gain * env * (rng.uniform() * 2.0 - 1.0);
  }
  return AudioBuffer::mono(std::move(h), sample_rate);
}

std::string generate_fixtures(const PipelineConfig& config, const std::string& out_dir) {
  const FixtureSpec& spec = config.fixtures;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (!fs::is_directory(out_dir)) throw DataError("gen-fixtures: cannot create directory " + out_dir);

  DatasetManifest manifest;
  const int total = spec.n_train + spec.n_valid + spec.n_test;
  for (int i = 0; i < total; ++i) {
    const Split split = i < spec.n_train                ? Split::train
                        : i < spec.n_train + spec.n_valid ? Split::valid
                                                          : Split::test;
    Rng voice_rng(derive_seed(config.train.seed, kFixtureStream, static_cast<uint64_t>(i) * 8));
    Rng acc1_rng(derive_seed(config.train.seed, kFixtureStream, static_cast<uint64_t>(i) * 8 + 1));
    Rng acc2_rng(derive_seed(config.train.seed, kFixtureStream, static_cast<uint64_t>(i) * 8 + 2));
    Rng srir_rng(derive_seed(config.train.seed, kFixtureStream, static_cast<uint64_t>(i) * 8 + 3));

    const AudioBuffer voice = synth_voice_clip(spec, config.sample_rate, voice_rng);
    const AudioBuffer acc1 = synth_accompaniment_clip(spec, config.sample_rate, acc1_rng);
    const AudioBuffer acc2 = synth_accompaniment_clip(spec, config.sample_rate, acc2_rng);
    const AudioBuffer srir = synth_srir(spec, config.sample_rate, srir_rng);

    const std::string stem = "clip" + std::to_string(i);
    write_wav((fs::path(out_dir) / (stem + "_voice.wav")).string(), voice);
    write_wav((fs::path(out_dir) / (stem + "_acc1.wav")).string(), acc1);
    write_wav((fs::path(out_dir) / (stem + "_acc2.wav")).string(), acc2);
    write_wav((fs::path(out_dir) / (stem + "_srir.wav")).string(), srir);

    ManifestEntry entry;
    entry.voice_path = stem + "_voice.wav";
    entry.srir_path = stem + "_srir.wav";
    entry.split = split;
    entry.accompaniment_paths = {stem + "_acc1.wav", stem + "_acc2.wav"};
    manifest.entries.push_back(std::move(entry));
  }

  const std::string manifest_path = (fs::path(out_dir) / "manifest.tsv").string();
  save_manifest(manifest_path, manifest);
  return manifest_path;
}

}  // namespace drysep::pipeline
