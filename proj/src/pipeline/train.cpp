#include "drysep/pipeline/train.hpp"

#include <cmath>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "drysep/errors.hpp"
#include "drysep/pipeline/dataset.hpp"

namespace fs = std::filesystem;

namespace drysep::pipeline {

namespace {

std::string checkpoint_name(uint64_t step) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "checkpoint-%06llu.dsvs", static_cast<unsigned long long>(step));
  return buf;
}

void require_config_match(const model::SeparatorConfig& a, const model::SeparatorConfig& b) {
  const bool same = a.mode == b.mode && a.encoder_blocks == b.encoder_blocks &&
                    a.residual_convs_per_block == b.residual_convs_per_block &&
                    a.base_channels == b.base_channels && a.kernel == b.kernel &&
                    a.use_svd == b.use_svd && a.three_conv_residual == b.three_conv_residual;
  if (!same) throw ConfigError("resume: checkpoint separator config differs from the run config");
}

}  // namespace

TrainResult run_training(const PipelineConfig& config, const TrainOptions& options) {
  config.validate();
#ifdef _OPENMP
  omp_set_num_threads(config.train.threads);
#endif

  const DatasetManifest manifest = load_manifest(options.manifest_path);
  const Dataset train(manifest, Split::train, config.sample_rate);
  if (train.empty()) throw DataError("train: empty train split in " + options.manifest_path);
  const std::vector<const Srir*> srir_pool = train.srir_pool();
  const FeatureExtractor features(config);

  fs::create_directories(options.out_dir);

  // model + optimizer, fresh or resumed
  model::SeparationModel<float> model(config.separator, config.svd, config.train.seed);
  nn::Adam<float> adam;
  NormStats stats;
  uint64_t start_step = 0;
  if (!options.resume_checkpoint.empty()) {
    const model::Checkpoint ckpt = model::load_checkpoint(options.resume_checkpoint);
    require_config_match(ckpt.separator, config.separator);
    model::apply_checkpoint(ckpt, model, adam);
    stats = ckpt.norm_stats;
    start_step = ckpt.step;
    if (start_step >= config.train.total_steps) {
      throw ConfigError("resume: checkpoint already at step " + std::to_string(start_step));
    }
  } else {
    stats = compute_norm_stats(manifest, config);
  }

  const std::string log_path = (fs::path(options.out_dir) / "loss_log.txt").string();
  std::ofstream log(log_path, start_step > 0 ? std::ios::app : std::ios::trunc);
  if (!log) throw DataError("train: cannot open loss log " + log_path);
  if (start_step == 0) {
    log << "# drysep training log\n";
    log << "# batch_size=" << config.train.batch_size << " total_steps=" << config.train.total_steps
        << " seed=" << config.train.seed << " threads=" << config.train.threads << "\n";
    log << "# mode=" << (config.separator.mode == model::SeparatorMode::mel_mask ? "mel_mask" : "direct_mel")
        << " use_svd=" << (config.separator.use_svd ? 1 : 0)
        << " base_lr=" << config.schedule.base_lr << " decay=" << config.schedule.decay
        << " interval=" << config.schedule.interval << "\n";
    log << "# columns: step lr loss term1 term2\n";
  }

  TrainResult result;
  const bool profile = std::getenv("DRYSEP_PROFILE") != nullptr;
  for (uint64_t step = start_step; step < config.train.total_steps; ++step) {
    const auto t0 = std::chrono::steady_clock::now();
    Batch batch = make_training_batch(train, srir_pool, features, stats, config, step);
    const auto t1 = std::chrono::steady_clock::now();

    auto out = model.separator->forward(batch.mel_mix, /*training=*/true);
    nn::Tensor<float> mask_hat;
    if (model.svd) mask_hat = model.svd->forward(out.voice_hat, /*training=*/true);

    auto loss = model::separation_loss(out.voice_hat, batch.mel_target, mask_hat, batch.mask_target);
    nn::Tensor<float> total = loss.total;
    if (config.train.aux_bce && mask_hat) {
      total = nn::add(total, model::detector_bce(mask_hat, batch.mask_target));
    }
    const auto t2 = std::chrono::steady_clock::now();

    const double loss_value = static_cast<double>(total->value[0]);
    const double term1 = static_cast<double>(loss.term1->value[0]);
    const double term2 = loss.term2 ? static_cast<double>(loss.term2->value[0]) : 0.0;
    if (!std::isfinite(loss_value)) {
      throw NumericError("train: non-finite loss at step " + std::to_string(step));
    }

    model.params.zero_grad();
    nn::backward(total);
    const auto t3 = std::chrono::steady_clock::now();
    const double lr = nn::lr_at(config.schedule, step);
    adam.step(model.params, lr);
    if (profile) {
      const auto t4 = std::chrono::steady_clock::now();
      auto ms = [](auto a, auto b) { return std::chrono::duration<double, std::milli>(b - a).count(); };
      std::fprintf(stderr, "profile step %llu: batch %.1f fwd %.1f bwd %.1f adam %.1f ms\n",
                   static_cast<unsigned long long>(step), ms(t0, t1), ms(t1, t2), ms(t2, t3),
                   ms(t3, t4));
    }

    char line[160];
    std::snprintf(line, sizeof line, "%llu %.10g %.10g %.10g %.10g\n",
                  static_cast<unsigned long long>(step), lr, loss_value, term1, term2);
    log << line;

    const uint64_t done = step + 1;
    if (done % config.train.checkpoint_every == 0 && done < config.train.total_steps) {
      const auto ckpt = model::checkpoint_from_model(model, adam, stats, done, config.train.seed);
      model::save_checkpoint((fs::path(options.out_dir) / checkpoint_name(done)).string(), ckpt);
    }
    if (!options.quiet && (done % 100 == 0 || done == config.train.total_steps)) {
      std::cerr << "step " << done << "/" << config.train.total_steps << " loss " << loss_value
                << "\n";
    }
  }
  log.flush();

  const auto ckpt = model::checkpoint_from_model(model, adam, stats, config.train.total_steps,
                                                 config.train.seed);
  result.final_checkpoint = (fs::path(options.out_dir) / "checkpoint-final.dsvs").string();
  model::save_checkpoint(result.final_checkpoint, ckpt);
  result.steps = config.train.total_steps;
  result.loss_log = log_path;
  return result;
}

std::vector<StepRecord> read_loss_log(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open loss log: " + path);
  std::vector<StepRecord> records;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    StepRecord r;
    if (ss >> r.step >> r.lr >> r.loss >> r.term1 >> r.term2) records.push_back(r);
  }
  return records;
}

}  // namespace drysep::pipeline
