#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "drysep/nn/ops.hpp"
#include "drysep/nn/tensor.hpp"
#include "drysep/rng.hpp"

namespace drysep::model {

using nn::Tensor;

enum class SeparatorMode { mel_mask, direct_mel };

struct SeparatorConfig {
  SeparatorMode mode = SeparatorMode::mel_mask;
  int encoder_blocks = 2;           // paper-scale preset uses 4
  int residual_convs_per_block = 4;
  int base_channels = 8;            // doubles per block; paper-scale preset 32
  int kernel = 3;
  bool use_svd = true;
  bool three_conv_residual = false; // residual blocks carry 2 convs by default
  double leaky_slope = 0.01;

  void validate() const {
    if (encoder_blocks < 1) throw ConfigError("separator: encoder_blocks must be >= 1");
    if (residual_convs_per_block < 1) {
      throw ConfigError("separator: residual_convs_per_block must be >= 1");
    }
    if (base_channels < 1) throw ConfigError("separator: base_channels must be >= 1");
    if (kernel < 1 || kernel % 2 == 0) throw ConfigError("separator: kernel must be odd");
  }
};

struct SvdConfig {
  int in_channels = 80;  // mel bands
  int hidden_channels = 32;
  int kernel = 3;

  void validate() const {
    if (in_channels < 1 || hidden_channels < 1) throw ConfigError("svd: channel counts must be >= 1");
    if (kernel < 1 || kernel % 2 == 0) throw ConfigError("svd: kernel must be odd");
  }
};

// Registry of batchnorm running statistics, checkpointed alongside the
// parameters so eval-mode behavior survives save/load.
template <typename T>
using BnStateRegistry = std::vector<std::pair<std::string, nn::BatchNormState<T>*>>;

namespace detail {

template <typename T>
Tensor<T> kaiming_conv_weight(std::vector<size_t> shape, Rng& rng) {
  size_t fan_in = 1;
  for (size_t i = 1; i < shape.size(); ++i) fan_in *= shape[i];
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  auto t = nn::make_tensor<T>(std::move(shape));
  for (auto& v : t->value) v = static_cast<T>(rng.uniform(-bound, bound));
  return t;
}

}  // namespace detail

template <typename T>
struct Conv2dLayer {
  Tensor<T> w, b;

  Conv2dLayer() = default;
  Conv2dLayer(size_t out_ch, size_t in_ch, size_t k, const std::string& name,
              nn::ParamStore<T>& params, Rng& rng) {
    w = params.add(name + ".weight", detail::kaiming_conv_weight<T>({out_ch, in_ch, k, k}, rng));
    b = params.add(name + ".bias", nn::make_tensor<T>({out_ch}));
  }
  Tensor<T> operator()(const Tensor<T>& x) const { return nn::conv2d(x, w, b); }
};

template <typename T>
struct Conv1dLayer {
  Tensor<T> w, b;

  Conv1dLayer() = default;
  Conv1dLayer(size_t out_ch, size_t in_ch, size_t k, const std::string& name,
              nn::ParamStore<T>& params, Rng& rng) {
    w = params.add(name + ".weight", detail::kaiming_conv_weight<T>({out_ch, in_ch, k}, rng));
    b = params.add(name + ".bias", nn::make_tensor<T>({out_ch}));
  }
  Tensor<T> operator()(const Tensor<T>& x) const { return nn::conv1d(x, w, b); }
};

template <typename T>
struct BnLayer {
  Tensor<T> gamma, beta;
  std::shared_ptr<nn::BatchNormState<T>> state;

  BnLayer() = default;
  BnLayer(size_t channels, const std::string& name, nn::ParamStore<T>& params,
          BnStateRegistry<T>& states) {
    gamma = params.add(name + ".gamma", nn::make_tensor<T>({channels}, std::vector<T>(channels, T(1))));
    beta = params.add(name + ".beta", nn::make_tensor<T>({channels}));
    state = std::make_shared<nn::BatchNormState<T>>();
    state->running_mean.assign(channels, T(0));
    state->running_var.assign(channels, T(1));
    states.push_back({name, state.get()});
  }
  Tensor<T> operator()(const Tensor<T>& x, bool training) const {
    return nn::batchnorm(x, gamma, beta, *state, training);
  }
};

// Pre-activation residual conv block: (BN -> LeakyReLU -> conv) x 2 (or 3)
// plus an identity shortcut, replaced by a plain 1x1 conv when the channel
// count changes.
template <typename T>
struct ResidualBlock2d {
  std::vector<BnLayer<T>> bns;
  std::vector<Conv2dLayer<T>> convs;
  std::optional<Conv2dLayer<T>> shortcut;
  double slope = 0.01;

  ResidualBlock2d() = default;
  ResidualBlock2d(size_t in_ch, size_t out_ch, size_t k, bool three_convs, double leaky_slope,
                  const std::string& name, nn::ParamStore<T>& params, BnStateRegistry<T>& states,
                  Rng& rng)
      : slope(leaky_slope) {
    const int n_convs = three_convs ? 3 : 2;
    size_t ch = in_ch;
    for (int i = 0; i < n_convs; ++i) {
      const std::string cname = name + ".conv" + std::to_string(i + 1);
      bns.emplace_back(ch, name + ".bn" + std::to_string(i + 1), params, states);
      convs.emplace_back(out_ch, ch, k, cname, params, rng);
      ch = out_ch;
    }
    if (in_ch != out_ch) {
      shortcut.emplace(out_ch, in_ch, size_t{1}, name + ".shortcut", params, rng);
    }
  }

  Tensor<T> operator()(const Tensor<T>& x, bool training) const {
    Tensor<T> h = x;
    for (size_t i = 0; i < convs.size(); ++i) {
      h = convs[i](nn::leaky_relu(bns[i](h, training), slope));
    }
    const Tensor<T> skip = shortcut ? (*shortcut)(x) : x;
    return nn::add(h, skip);
  }
};

// Stack of residual blocks forming one encoder or decoder stage; the first
// block performs the channel change.
template <typename T>
struct ResidualStack2d {
  std::vector<ResidualBlock2d<T>> blocks;

  ResidualStack2d() = default;
  ResidualStack2d(size_t in_ch, size_t out_ch, size_t k, int n_blocks, bool three_convs,
                  double slope, const std::string& name, nn::ParamStore<T>& params,
                  BnStateRegistry<T>& states, Rng& rng) {
    for (int i = 0; i < n_blocks; ++i) {
      blocks.emplace_back(i == 0 ? in_ch : out_ch, out_ch, k, three_convs, slope,
                          name + ".res" + std::to_string(i + 1), params, states, rng);
    }
  }

  Tensor<T> operator()(Tensor<T> x, bool training) const {
    for (const auto& block : blocks) x = block(x, training);
    return x;
  }
};

// Deep residual U-Net over normalized mel input [N,1,T,M]. The decoder
// concatenates the matching encoder features; the sigmoid head yields values
// in [0,1], interpreted per mode as a mask on the input or as the mel itself.
template <typename T>
class Separator {
 public:
  Separator(const SeparatorConfig& config, nn::ParamStore<T>& params, BnStateRegistry<T>& states,
            Rng& rng)
      : config_(config) {
    config.validate();
    const size_t k = static_cast<size_t>(config.kernel);
    const size_t c0 = static_cast<size_t>(config.base_channels);
    stem_bn_ = BnLayer<T>(1, "separator.stem.bn", params, states);
    stem_ = Conv2dLayer<T>(c0, 1, k, "separator.stem.conv", params, rng);

    size_t ch = c0;
    for (int b = 0; b < config.encoder_blocks; ++b) {
      const size_t out_ch = c0 << b;
      encoder_.emplace_back(ch, out_ch, k, config.residual_convs_per_block,
                            config.three_conv_residual, config.leaky_slope,
                            "separator.enc" + std::to_string(b), params, states, rng);
      ch = out_ch;
    }
    for (int b = config.encoder_blocks - 1; b >= 0; --b) {
      const size_t enc_ch = c0 << b;
      const size_t in_ch = ch + enc_ch;  // upsampled features + skip
      const size_t out_ch = b > 0 ? (c0 << (b - 1)) : c0;
      decoder_.emplace_back(in_ch, out_ch, k, config.residual_convs_per_block,
                            config.three_conv_residual, config.leaky_slope,
                            "separator.dec" + std::to_string(b), params, states, rng);
      ch = out_ch;
    }
    head_bn_ = BnLayer<T>(ch, "separator.head.bn", params, states);
    head_ = Conv2dLayer<T>(1, ch, k, "separator.head.conv", params, rng);
  }

  struct Output {
    Tensor<T> voice_hat;       // [N,1,T,M], in [0,1]
    Tensor<T> mask;            // [N,1,T,M] in mask mode, null otherwise
  };

  // Input must be normalized-stage mel values in [0,1]; frames are padded
  // to a multiple of 2^encoder_blocks internally and cropped on output.
  Output forward(const Tensor<T>& mel_mix, bool training) const {
    nn::detail::check_rank(mel_mix, 4, "separator input");
    const size_t t = mel_mix->shape[2];
    const size_t m = mel_mix->shape[3];
    const size_t stride = size_t{1} << config_.encoder_blocks;
    if (m % stride != 0) {
      throw DataError("separator: mel band count " + std::to_string(m) +
                      " not divisible by 2^" + std::to_string(config_.encoder_blocks));
    }
    const size_t t_pad = (t + stride - 1) / stride * stride;

    Tensor<T> h = nn::pad_frames(mel_mix, t_pad);
    h = stem_(nn::leaky_relu(stem_bn_(h, training), config_.leaky_slope));

    std::vector<Tensor<T>> skips;
    for (const auto& stage : encoder_) {
      h = stage(h, training);
      skips.push_back(h);
      h = nn::avgpool2(h);
    }
    for (size_t i = 0; i < decoder_.size(); ++i) {
      h = nn::upsample2(h);
      h = nn::concat_channels(h, skips[skips.size() - 1 - i]);
      h = decoder_[i](h, training);
    }
    h = head_(nn::leaky_relu(head_bn_(h, training), config_.leaky_slope));
    Tensor<T> unit = nn::sigmoid(nn::crop_frames(h, t));

    Output out;
    if (config_.mode == SeparatorMode::mel_mask) {
      out.mask = unit;
      out.voice_hat = nn::elementwise_mul(unit, mel_mix);
    } else {
      out.voice_hat = unit;
    }
    return out;
  }

  const SeparatorConfig& config() const { return config_; }

 private:
  SeparatorConfig config_;
  BnLayer<T> stem_bn_;
  Conv2dLayer<T> stem_;
  std::vector<ResidualStack2d<T>> encoder_;
  std::vector<ResidualStack2d<T>> decoder_;
  BnLayer<T> head_bn_;
  Conv2dLayer<T> head_;
};

// Singing voice detector: three 1D convolutions over the mel axis treated
// as channels (80 -> 32 -> 32 -> 1), time length preserved, sigmoid output.
template <typename T>
class SvdDetector {
 public:
  SvdDetector(const SvdConfig& config, nn::ParamStore<T>& params, BnStateRegistry<T>& states,
              Rng& rng)
      : config_(config) {
    config.validate();
    const size_t k = static_cast<size_t>(config.kernel);
    const size_t cin = static_cast<size_t>(config.in_channels);
    const size_t hid = static_cast<size_t>(config.hidden_channels);
    bn1_ = BnLayer<T>(cin, "svd.bn1", params, states);
    conv1_ = Conv1dLayer<T>(hid, cin, k, "svd.conv1", params, rng);
    bn2_ = BnLayer<T>(hid, "svd.bn2", params, states);
    conv2_ = Conv1dLayer<T>(hid, hid, k, "svd.conv2", params, rng);
    bn3_ = BnLayer<T>(hid, "svd.bn3", params, states);
    conv3_ = Conv1dLayer<T>(1, hid, k, "svd.conv3", params, rng);
  }

  // mel [N,1,T,M] -> predicted detection mask [N,1,T] in [0,1]
  Tensor<T> forward(const Tensor<T>& mel, bool training) const {
    Tensor<T> h = nn::mel_to_seq(mel);
    if (h->shape[1] != static_cast<size_t>(config_.in_channels)) {
      throw DataError("svd: expected " + std::to_string(config_.in_channels) + " mel bands, got " +
                      std::to_string(h->shape[1]));
    }
    h = conv1_(nn::leaky_relu(bn1_(h, training), slope_));
    h = conv2_(nn::leaky_relu(bn2_(h, training), slope_));
    h = conv3_(nn::leaky_relu(bn3_(h, training), slope_));
    return nn::sigmoid(h);
  }

  const SvdConfig& config() const { return config_; }

 private:
  SvdConfig config_;
  double slope_ = 0.01;
  BnLayer<T> bn1_, bn2_, bn3_;
  Conv1dLayer<T> conv1_, conv2_, conv3_;
};

template <typename T>
struct LossParts {
  Tensor<T> total;
  Tensor<T> term1;
  Tensor<T> term2;  // null when the detector term is disabled
};

// L = mean|X_hat - X| + mean|X_hat_masked - X_masked|; the second term uses
// the predicted mask on the prediction and the target mask on the target,
// and gradients flow through both the prediction and the predicted mask.
template <typename T>
LossParts<T> separation_loss(const Tensor<T>& voice_hat, const Tensor<T>& target,
                             const Tensor<T>& mask_hat, const Tensor<T>& mask_target) {
  nn::detail::check_same_shape(voice_hat, target, "separation_loss");
  LossParts<T> parts;
  parts.term1 = nn::mae(voice_hat, target);
  if (!mask_hat) {
    parts.total = parts.term1;
    return parts;
  }
  if (!mask_target) throw DataError("separation_loss: predicted mask given without a target mask");
  const Tensor<T> pred_masked = nn::scale_time(voice_hat, mask_hat);
  const Tensor<T> target_masked = nn::scale_time(target, mask_target);
  parts.term2 = nn::mae(pred_masked, target_masked);
  parts.total = nn::add(parts.term1, parts.term2);
  return parts;
}

// Optional auxiliary detector loss (disabled by default in training): mean
// binary cross-entropy of the predicted mask against the target mask.
template <typename T>
Tensor<T> detector_bce(const Tensor<T>& mask_hat, const Tensor<T>& mask_target) {
  nn::detail::check_same_shape(mask_hat, mask_target, "detector_bce");
  const T eps = static_cast<T>(1e-7);
  const T inv_n = T(1) / static_cast<T>(mask_hat->numel());
  auto out = nn::make_op_result<T>(
      {1}, {mask_hat, mask_target}, [mask_hat, mask_target, eps, inv_n](nn::Node<T>& node) {
        if (!mask_hat->requires_grad) return;
        const T g = node.grad[0] * inv_n;
        for (size_t i = 0; i < mask_hat->value.size(); ++i) {
          const T p = std::clamp(mask_hat->value[i], eps, T(1) - eps);
          const T y = mask_target->value[i];
          mask_hat->grad[i] += g * (p - y) / (p * (T(1) - p));
        }
      });
  T acc = T(0);
  for (size_t i = 0; i < mask_hat->value.size(); ++i) {
    const T p = std::clamp(mask_hat->value[i], eps, T(1) - eps);
    const T y = mask_target->value[i];
    acc += -(y * std::log(p) + (T(1) - y) * std::log(T(1) - p));
  }
  out->value[0] = acc * inv_n;
  return out;
}

// Full model: separator plus detector sharing one parameter store so a
// single optimizer step updates both.
template <typename T>
class SeparationModel {
 public:
  static constexpr uint64_t kInitStream = 11;

  SeparationModel(const SeparatorConfig& sep_config, const SvdConfig& svd_config, uint64_t seed) {
    Rng rng(derive_seed(seed, kInitStream, 0));
    separator = std::make_unique<Separator<T>>(sep_config, params, bn_states, rng);
    if (sep_config.use_svd) {
      svd = std::make_unique<SvdDetector<T>>(svd_config, params, bn_states, rng);
    }
    svd_config_ = svd_config;
  }

  const SeparatorConfig& separator_config() const { return separator->config(); }
  const SvdConfig& svd_config() const { return svd_config_; }

  nn::ParamStore<T> params;
  BnStateRegistry<T> bn_states;
  std::unique_ptr<Separator<T>> separator;
  std::unique_ptr<SvdDetector<T>> svd;  // null when use_svd is off

 private:
  SvdConfig svd_config_;
};

}  // namespace drysep::model
