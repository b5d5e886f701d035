#pragma once

#include <cstdint>
#include <string>

#include "drysep/detection.hpp"
#include "drysep/model/network.hpp"
#include "drysep/nn/optimizer.hpp"
#include "drysep/stft.hpp"

namespace drysep::pipeline {

struct MelSettings {
  int n_mels = 80;
  double fmin = 0.0;
  double fmax = 12000.0;
};

struct FixtureSpec {
  int n_train = 4;
  int n_valid = 1;
  int n_test = 2;
  double clip_seconds = 10.0;
  double f0_min = 110.0;
  double f0_max = 880.0;
  double rt60_min = 0.2;
  double rt60_max = 1.2;
};

struct TrainSettings {
  int batch_size = 4;        // paper setting
  uint64_t total_steps = 2000;  // paper trains 1e6; toy default keeps runs desk-scale
  uint64_t checkpoint_every = 500;
  uint64_t seed = 1234;
  double segment_seconds = 3.0;
  int threads = 4;  // recorded so kernel-internal parallelism is a config value
  bool aux_bce = false;
};

struct PathSettings {
  std::string data_dir;
  std::string manifest;
  std::string checkpoint;
};

struct PipelineConfig {
  int sample_rate = 24000;
  StftParams stft;
  MelSettings mel;
  double detection_threshold = kDetectionThreshold;
  model::SeparatorConfig separator;
  model::SvdConfig svd;
  nn::LrSchedule schedule;
  TrainSettings train;
  FixtureSpec fixtures;
  PathSettings paths;

  void validate() const;
};

// Flat key=value file with [section] headers; '#' starts a comment.
// Every field above is addressable; unknown sections or keys are errors.
PipelineConfig load_config(const std::string& path);
PipelineConfig parse_config_text(const std::string& text, const std::string& origin);

std::string config_to_text(const PipelineConfig& config);

}  // namespace drysep::pipeline
