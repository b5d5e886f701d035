#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drysep/mel.hpp"
#include "drysep/model/network.hpp"
#include "drysep/nn/optimizer.hpp"

namespace drysep::model {

struct TensorBlob {
  std::string name;
  std::vector<size_t> shape;
  std::vector<float> values;
};

// Serialized training state: every model parameter exactly once, batchnorm
// running statistics, Adam moments, the configs, norm stats and counters.
// Round-trips bit-exactly.
struct Checkpoint {
  SeparatorConfig separator;
  SvdConfig svd;
  NormStats norm_stats{0.0, 1.0};
  uint64_t step = 0;
  uint64_t seed = 0;
  uint64_t adam_step = 0;
  std::vector<TensorBlob> tensors;

  const TensorBlob* find(const std::string& name) const;
};

inline constexpr char kCheckpointMagic[] = "DSVS1";

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint checkpoint_from_model(const SeparationModel<float>& model,
                                 const nn::Adam<float>& adam, const NormStats& stats,
                                 uint64_t step, uint64_t seed);

// Restores parameters, batchnorm state and optimizer moments into an
// already-constructed model; throws listing absent/extra tensor names when
// the checkpoint does not match the model's configuration.
void apply_checkpoint(const Checkpoint& ckpt, SeparationModel<float>& model,
                      nn::Adam<float>& adam);

}  // namespace drysep::model
