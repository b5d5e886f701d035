#pragma once

#include <optional>
#include <string>
#include <vector>

#include "drysep/detection.hpp"
#include "drysep/manifest.hpp"
#include "drysep/mel.hpp"
#include "drysep/mixing.hpp"
#include "drysep/nn/tensor.hpp"
#include "drysep/pipeline/config.hpp"

namespace drysep::pipeline {

struct LoadedEntry {
  std::string id;
  AudioBuffer voice;  // mono, pipeline rate
  std::vector<AudioBuffer> accompaniments;
  std::optional<Srir> srir;
};

// All clips of one split held in memory, mono and resampled to the
// pipeline rate.
class Dataset {
 public:
  Dataset(const DatasetManifest& manifest, Split split, int sample_rate);

  const std::vector<LoadedEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  size_t size() const { return entries_.size(); }

  // every SRIR of the split, for per-step random selection
  std::vector<const Srir*> srir_pool() const;

 private:
  std::vector<LoadedEntry> entries_;
};

// STFT/mel/detection frontend bound to one pipeline configuration.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(const PipelineConfig& config);

  MelSpectrogram linear_mel(const AudioBuffer& buffer) const;
  MelSpectrogram log_mel(const AudioBuffer& buffer) const;
  MelSpectrogram normalized_mel(const AudioBuffer& buffer, const NormStats& stats) const;
  DetectionMask detection_target(const AudioBuffer& dry_voice) const;

  const MelFilterbank& filterbank() const { return fb_; }
  const StftParams& stft_params() const { return stft_; }
  int sample_rate() const { return sample_rate_; }

 private:
  StftParams stft_;
  MelFilterbank fb_;
  double threshold_;
  int sample_rate_;
};

// Global min/max of log-mel values over the train split, taken over each
// entry's dry voice and a canonical mixture (alpha 0.5, stems truncated to
// a common length). Deterministic; no augmentation randomness involved.
NormStats compute_norm_stats(const DatasetManifest& manifest, const PipelineConfig& config);

// One canonical (mixture, dry) pair per entry, used by norm stats and by
// evaluation. alpha is fixed for stats and entry-seeded for evaluation.
AugmentedExample canonical_example(const LoadedEntry& entry, double alpha);

struct Batch {
  nn::Tensor<float> mel_mix;      // [N,1,T,M] normalized
  nn::Tensor<float> mel_target;   // [N,1,T,M] normalized
  nn::Tensor<float> mask_target;  // [N,1,T] binary
};

// Deterministic batch for one training step: entry choice, crop offsets,
// SRIR pick and alpha all derive from (seed, step) so a resumed run sees
// exactly the batches of an uninterrupted one.
Batch make_training_batch(const Dataset& train, const std::vector<const Srir*>& srir_pool,
                          const FeatureExtractor& features, const NormStats& stats,
                          const PipelineConfig& config, uint64_t step);

}  // namespace drysep::pipeline
