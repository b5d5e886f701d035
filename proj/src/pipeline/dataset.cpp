#include "drysep/pipeline/dataset.hpp"

#include <cmath>
#include <exception>

#include "drysep/errors.hpp"
#include "drysep/resample.hpp"
#include "drysep/wav_io.hpp"

namespace drysep::pipeline {

namespace {

constexpr uint64_t kStreamData = 7;
constexpr uint64_t kStreamSrir = 13;

AudioBuffer load_mono(const std::string& path, int sample_rate) {
  return resample(downmix_mono(read_wav(path)), sample_rate);
}

}  // namespace

Dataset::Dataset(const DatasetManifest& manifest, Split split, int sample_rate) {
  for (const ManifestEntry* e : manifest.split_entries(split)) {
    LoadedEntry entry;
    entry.id = e->voice_path;
    entry.voice = load_mono(e->voice_path, sample_rate);
    for (const auto& a : e->accompaniment_paths) {
      entry.accompaniments.push_back(load_mono(a, sample_rate));
    }
    if (e->has_srir()) {
      entry.srir = Srir::from_buffer(resample(read_wav(e->srir_path), sample_rate), e->srir_path);
    }
    entries_.push_back(std::move(entry));
  }
}

std::vector<const Srir*> Dataset::srir_pool() const {
  std::vector<const Srir*> pool;
  for (const auto& e : entries_) {
    if (e.srir) pool.push_back(&*e.srir);
  }
  return pool;
}

FeatureExtractor::FeatureExtractor(const PipelineConfig& config)
    : stft_(config.stft),
      fb_(build_mel_filterbank(config.mel.n_mels, config.stft.fft_size, config.sample_rate,
                               config.mel.fmin, config.mel.fmax)),
      threshold_(config.detection_threshold),
      sample_rate_(config.sample_rate) {}

MelSpectrogram FeatureExtractor::linear_mel(const AudioBuffer& buffer) const {
  return to_mel(magnitude(stft(buffer, stft_)), fb_);
}

MelSpectrogram FeatureExtractor::log_mel(const AudioBuffer& buffer) const {
  return log_compress(linear_mel(buffer));
}

MelSpectrogram FeatureExtractor::normalized_mel(const AudioBuffer& buffer,
                                                const NormStats& stats) const {
  return minmax_normalize(log_mel(buffer), stats);
}

DetectionMask FeatureExtractor::detection_target(const AudioBuffer& dry_voice) const {
  return target_detection_mask(magnitude(stft(dry_voice, stft_)), threshold_);
}

AugmentedExample canonical_example(const LoadedEntry& entry, double alpha) {
  size_t len = entry.voice.length();
  for (const auto& a : entry.accompaniments) len = std::min(len, a.length());

  auto cut = [len](const AudioBuffer& b) {
    std::vector<double> s(b.samples().begin(), b.samples().begin() + static_cast<long>(len));
    return AudioBuffer::mono(std::move(s), b.sample_rate);
  };

  AugmentedExample ex;
  ex.dry = cut(entry.voice);
  ex.alpha = alpha;

  AudioBuffer wet = AudioBuffer::silence(len, entry.voice.sample_rate);
  if (entry.srir && alpha > 0.0) {
    ReverbSpec spec{&*entry.srir, alpha};
    wet = render_reverb(ex.dry, spec);
  }
  AudioBuffer acc = AudioBuffer::silence(len, entry.voice.sample_rate);
  for (const auto& a : entry.accompaniments) {
    acc = mix(acc, cut(a), AudioBuffer::silence(len, entry.voice.sample_rate));
  }
  ex.mixture = mix(ex.dry, wet, acc);
  return ex;
}

NormStats compute_norm_stats(const DatasetManifest& manifest, const PipelineConfig& config) {
  const Dataset train(manifest, Split::train, config.sample_rate);
  if (train.empty()) throw DataError("norm stats: empty train split");
  const FeatureExtractor features(config);

  std::vector<MelSpectrogram> log_mels;
  for (const auto& entry : train.entries()) {
    const AugmentedExample ex = canonical_example(entry, 0.5);
    log_mels.push_back(features.log_mel(ex.dry));
    log_mels.push_back(features.log_mel(ex.mixture));
  }
  return norm_stats_from(log_mels);
}

Batch make_training_batch(const Dataset& train, const std::vector<const Srir*>& srir_pool,
                          const FeatureExtractor& features, const NormStats& stats,
                          const PipelineConfig& config, uint64_t step) {
  if (train.empty()) throw DataError("training batch: empty train split");
  const size_t batch = static_cast<size_t>(config.train.batch_size);
  const size_t seg_len =
      static_cast<size_t>(std::llround(config.train.segment_seconds * config.sample_rate));
  const size_t frames = 1 + seg_len / static_cast<size_t>(config.stft.hop);
  const size_t n_mels = static_cast<size_t>(config.mel.n_mels);

  std::vector<float> mix_values(batch * frames * n_mels);
  std::vector<float> target_values(batch * frames * n_mels);
  std::vector<float> mask_values(batch * frames);

  // items are independent; per-item rng streams keep results identical in
  // any execution order
  for (size_t item = 0; item < batch; ++item) {
    {
      const uint64_t draw = step * batch + item;
      Rng data_rng(derive_seed(config.train.seed, kStreamData, draw));
      Rng srir_rng(derive_seed(config.train.seed, kStreamSrir, draw));

      const auto& entries = train.entries();
      const LoadedEntry& voice_entry = entries[data_rng.uniform_index(entries.size())];
      const LoadedEntry& acc_entry1 = entries[data_rng.uniform_index(entries.size())];
      const LoadedEntry& acc_entry2 = entries[data_rng.uniform_index(entries.size())];
      const AudioBuffer& acc_src1 =
          acc_entry1.accompaniments[data_rng.uniform_index(acc_entry1.accompaniments.size())];
      const AudioBuffer& acc_src2 =
          acc_entry2.accompaniments[data_rng.uniform_index(acc_entry2.accompaniments.size())];

      // independent crops: the stems come from different tracks
      std::vector<AudioBuffer> voice_seg = segment_random({voice_entry.voice},
                                                          config.train.segment_seconds, data_rng)
                                               .buffers;
      std::vector<AudioBuffer> acc1_seg =
          segment_random({acc_src1}, config.train.segment_seconds, data_rng).buffers;
      std::vector<AudioBuffer> acc2_seg =
          segment_random({acc_src2}, config.train.segment_seconds, data_rng).buffers;

      AugmentedExample ex;
      if (!srir_pool.empty()) {
        const Srir* srir = srir_pool[srir_rng.uniform_index(srir_pool.size())];
        ex = mix_audio_augment(voice_seg[0], acc1_seg[0], acc2_seg[0], *srir, srir_rng);
      } else {
        ex.dry = voice_seg[0];
        ex.mixture = mix(voice_seg[0], acc1_seg[0], acc2_seg[0]);
      }

      const MelSpectrogram mel_mix = features.normalized_mel(ex.mixture, stats);
      const MelSpectrogram mel_dry = features.normalized_mel(ex.dry, stats);
      const DetectionMask mask = features.detection_target(ex.dry);
      if (mel_mix.frames != frames || mel_dry.frames != frames) {
        throw DataError("training batch: inconsistent frame counts across items");
      }

      float* mix_out = &mix_values[item * frames * n_mels];
      float* target_out = &target_values[item * frames * n_mels];
      float* mask_out = &mask_values[item * frames];
      for (size_t i = 0; i < frames * n_mels; ++i) mix_out[i] = static_cast<float>(mel_mix.data[i]);
      for (size_t i = 0; i < frames * n_mels; ++i) target_out[i] = static_cast<float>(mel_dry.data[i]);
      for (size_t i = 0; i < frames; ++i) mask_out[i] = static_cast<float>(mask.values[i]);
    }
  }

  Batch out;
  out.mel_mix = nn::make_tensor<float>({batch, 1, frames, n_mels}, std::move(mix_values));
  out.mel_target = nn::make_tensor<float>({batch, 1, frames, n_mels}, std::move(target_values));
  out.mask_target = nn::make_tensor<float>({batch, 1, frames}, std::move(mask_values));
  return out;
}

}  // namespace drysep::pipeline
