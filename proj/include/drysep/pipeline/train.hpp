#pragma once

#include <string>

#include "drysep/model/checkpoint.hpp"
#include "drysep/pipeline/config.hpp"

namespace drysep::pipeline {

struct TrainOptions {
  std::string manifest_path;
  std::string out_dir;
  std::string resume_checkpoint;  // empty for a fresh run
  bool quiet = false;
};

struct StepRecord {
  uint64_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
  double term1 = 0.0;
  double term2 = 0.0;
};

struct TrainResult {
  uint64_t steps = 0;
  std::string final_checkpoint;
  std::string loss_log;
};

// Full training run: loads the train split, computes (or restores) norm
// stats, then runs total_steps of forward/backward/Adam with per-step loss
// logging and periodic checkpoints. Deterministic given the config seed;
// throws NumericError on a non-finite loss.
TrainResult run_training(const PipelineConfig& config, const TrainOptions& options);

// Parses "step lr loss term1 term2" lines from a loss log.
std::vector<StepRecord> read_loss_log(const std::string& path);

}  // namespace drysep::pipeline
