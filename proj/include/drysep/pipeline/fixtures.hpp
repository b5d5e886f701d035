#pragma once

#include <string>

#include "drysep/audio_buffer.hpp"
#include "drysep/manifest.hpp"
#include "drysep/pipeline/config.hpp"
#include "drysep/rng.hpp"

namespace drysep::pipeline {

// Synthetic stand-ins for real corpora: harmonic voices with silent gaps,
// filtered-noise accompaniments with percussive clicks, and
// exponential-decay SRIRs. Fully deterministic per seed.

// Harmonic tone with vibrato and an on/off amplitude envelope. Voiced
// segments are calibrated well above the detection threshold.
AudioBuffer synth_voice_clip(const FixtureSpec& spec, int sample_rate, Rng& rng);

// Low-passed noise bed plus decaying click bursts.
AudioBuffer synth_accompaniment_clip(const FixtureSpec& spec, int sample_rate, Rng& rng);

// Unit direct path followed by exponentially decaying white noise with an
// RT60 drawn from the configured range.
AudioBuffer synth_srir(const FixtureSpec& spec, int sample_rate, Rng& rng);

// Writes voice/acc1/acc2/srir WAV files for every clip plus manifest.tsv
// (relative paths) into out_dir. Returns the manifest path.
std::string generate_fixtures(const PipelineConfig& config, const std::string& out_dir);

}  // namespace drysep::pipeline
