#include "drysep/vocoder.hpp"

#include "drysep/errors.hpp"

namespace drysep {

Vocoder::Vocoder(MelFilterbank fb, StftParams params, int sample_rate)
    : fb_(std::move(fb)), inverter_(fb_), params_(params), sample_rate_(sample_rate) {
  params_.validate();
}

AudioBuffer Vocoder::synthesize(const VocoderRequest& request) const {
  MelSpectrogram mel = request.mel;
  if (mel.stage == MelStage::normalized) {
    if (!request.norm_stats) {
      throw DataError("vocoder: normalized mel requires norm stats");
    }
    mel = minmax_denormalize(mel, *request.norm_stats);
  }
  if (mel.stage != MelStage::log) {
    throw DataError("vocoder: expected log or normalized mel input");
  }
  const MelSpectrogram linear = log_decompress(mel);
  const MagnitudeSpectrogram mag = inverter_.invert(linear);
  return griffin_lim(mag, params_, sample_rate_, request.iterations, request.seed);
}

AudioBuffer synthesize(const VocoderRequest& request) {
  static const Vocoder vocoder(build_mel_filterbank(), StftParams{}, 24000);
  return vocoder.synthesize(request);
}

}  // namespace drysep
