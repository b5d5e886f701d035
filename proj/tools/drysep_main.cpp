#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "drysep/errors.hpp"
#include "drysep/pipeline/commands.hpp"
#include "drysep/wav_io.hpp"

using namespace drysep;

int main(int argc, char** argv) {
  CLI::App app{"dry singing voice separation pipeline"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", manifest_path, checkpoint_path;
  std::string input_wav, output_wav, dump_mel, split_name = "test", out_csv = "eval_report.csv";
  std::string resume_checkpoint;
  uint64_t seed_override = 0;
  bool has_seed_override = false;

  auto* gen = app.add_subcommand("gen-fixtures", "generate a synthetic dataset with manifest");
  gen->add_option("-c,--config", config_path, "pipeline config file");
  gen->add_option("-o,--out", out_dir, "output directory")->required();
  gen->add_option("--seed", seed_override, "override train.seed")->each([&](const std::string&) {
    has_seed_override = true;
  });

  auto* train = app.add_subcommand("train", "train the separator on a manifest");
  train->add_option("-c,--config", config_path, "pipeline config file");
  train->add_option("-m,--manifest", manifest_path, "dataset manifest")->required();
  train->add_option("-o,--out", out_dir, "run directory for checkpoints and logs")->required();
  train->add_option("--resume", resume_checkpoint, "checkpoint to resume from");
  train->add_option("--seed", seed_override, "override train.seed")->each([&](const std::string&) {
    has_seed_override = true;
  });

  auto* sep = app.add_subcommand("separate", "separate a mixture wav with a checkpoint");
  sep->add_option("-c,--config", config_path, "pipeline config file");
  sep->add_option("-k,--checkpoint", checkpoint_path, "model checkpoint")->required();
  sep->add_option("-i,--input", input_wav, "input mixture wav")->required();
  sep->add_option("-o,--output", output_wav, "output wav")->required();
  sep->add_option("--dump-mel", dump_mel, "write the pre-vocoder normalized mel as csv");

  auto* eval = app.add_subcommand("evaluate", "score a checkpoint on a manifest split");
  eval->add_option("-c,--config", config_path, "pipeline config file");
  eval->add_option("-k,--checkpoint", checkpoint_path, "model checkpoint")->required();
  eval->add_option("-m,--manifest", manifest_path, "dataset manifest")->required();
  eval->add_option("-s,--split", split_name, "split to score (train/valid/test)");
  eval->add_option("-o,--out", out_csv, "report csv path");

  auto* inspect = app.add_subcommand("inspect-checkpoint", "print checkpoint header fields");
  inspect->add_option("checkpoint", checkpoint_path, "checkpoint path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    pipeline::PipelineConfig config;
    if (!config_path.empty()) config = pipeline::load_config(config_path);
    if (has_seed_override) config.train.seed = seed_override;
    config.validate();

    if (gen->parsed()) return pipeline::cmd_gen_fixtures(config, out_dir);
    if (train->parsed()) {
      return pipeline::cmd_train(config, manifest_path, out_dir, resume_checkpoint);
    }
    if (sep->parsed()) {
      return pipeline::cmd_separate(config, checkpoint_path, input_wav, output_wav, dump_mel);
    }
    if (eval->parsed()) {
      return pipeline::cmd_evaluate(config, checkpoint_path, manifest_path,
                                    parse_split(split_name), out_csv);
    }
    if (inspect->parsed()) return pipeline::cmd_inspect_checkpoint(checkpoint_path);
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const WavError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
