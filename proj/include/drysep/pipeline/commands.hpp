#pragma once

#include <string>

#include "drysep/model/checkpoint.hpp"
#include "drysep/pipeline/config.hpp"
#include "drysep/pipeline/dataset.hpp"

namespace drysep::pipeline {

struct SeparationResult {
  MelSpectrogram predicted_mel;  // normalized stage, after detector masking
  AudioBuffer waveform;          // pipeline rate
  bool input_was_resampled = false;
};

// Full inference path: mixture -> stft -> mel -> log -> normalize ->
// separator -> detector mask (when enabled) -> vocoder fallback.
SeparationResult separate_buffer(const AudioBuffer& input, model::SeparationModel<float>& model,
                                 const FeatureExtractor& features, const NormStats& stats,
                                 int griffin_lim_iterations, uint64_t seed);

// CLI verbs. Each returns the process exit code (0 on success); errors are
// thrown and mapped to codes by the CLI shell.
int cmd_gen_fixtures(const PipelineConfig& config, const std::string& out_dir);
int cmd_train(const PipelineConfig& config, const std::string& manifest_path,
              const std::string& out_dir, const std::string& resume_checkpoint);
int cmd_separate(const PipelineConfig& config, const std::string& checkpoint_path,
                 const std::string& input_wav, const std::string& output_wav,
                 const std::string& dump_mel_csv);
int cmd_evaluate(const PipelineConfig& config, const std::string& checkpoint_path,
                 const std::string& manifest_path, Split split, const std::string& out_csv);
int cmd_inspect_checkpoint(const std::string& checkpoint_path);

}  // namespace drysep::pipeline
