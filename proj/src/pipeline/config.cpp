#include "drysep/pipeline/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "drysep/errors.hpp"

namespace drysep::pipeline {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

int parse_int(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    const int out = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return out;
  } catch (...) {
    throw ConfigError("config: key '" + key + "' expects an integer, got '" + v + "'");
  }
}

uint64_t parse_u64(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    const unsigned long long out = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return out;
  } catch (...) {
    throw ConfigError("config: key '" + key + "' expects a nonnegative integer, got '" + v + "'");
  }
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return out;
  } catch (...) {
    throw ConfigError("config: key '" + key + "' expects a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config: key '" + key + "' expects a boolean, got '" + v + "'");
}

}  // namespace

void PipelineConfig::validate() const {
  if (sample_rate <= 0) throw ConfigError("config: audio.sample_rate must be positive");
  stft.validate();
  if (mel.n_mels <= 0) throw ConfigError("config: mel.n_mels must be positive");
  if (mel.fmax > sample_rate / 2.0) throw ConfigError("config: mel.fmax above Nyquist");
  separator.validate();
  svd.validate();
  schedule.validate();
  if (train.batch_size <= 0) throw ConfigError("config: train.batch_size must be positive");
  if (train.total_steps == 0) throw ConfigError("config: train.total_steps must be positive");
  if (train.checkpoint_every == 0) throw ConfigError("config: train.checkpoint_every must be positive");
  if (train.segment_seconds <= 0) throw ConfigError("config: train.segment_seconds must be positive");
  if (train.threads <= 0) throw ConfigError("config: train.threads must be positive");
  if (fixtures.n_train < 0 || fixtures.n_valid < 0 || fixtures.n_test < 0) {
    throw ConfigError("config: fixture clip counts must be nonnegative");
  }
  if (detection_threshold < 0.0) throw ConfigError("config: detection.threshold must be nonnegative");
  if (svd.in_channels != mel.n_mels) {
    throw ConfigError("config: svd.in_channels must equal mel.n_mels");
  }
}

PipelineConfig parse_config_text(const std::string& text, const std::string& origin) {
  PipelineConfig cfg;

  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"audio.sample_rate", [&](const std::string& k, const std::string& v) { cfg.sample_rate = parse_int(v, k); }},
      {"stft.fft_size", [&](const std::string& k, const std::string& v) { cfg.stft.fft_size = parse_int(v, k); }},
      {"stft.hop", [&](const std::string& k, const std::string& v) { cfg.stft.hop = parse_int(v, k); }},
      {"mel.n_mels", [&](const std::string& k, const std::string& v) {
         cfg.mel.n_mels = parse_int(v, k);
         cfg.svd.in_channels = cfg.mel.n_mels;
       }},
      {"mel.fmin", [&](const std::string& k, const std::string& v) { cfg.mel.fmin = parse_double(v, k); }},
      {"mel.fmax", [&](const std::string& k, const std::string& v) { cfg.mel.fmax = parse_double(v, k); }},
      {"detection.threshold", [&](const std::string& k, const std::string& v) { cfg.detection_threshold = parse_double(v, k); }},
      {"separator.mode", [&](const std::string& k, const std::string& v) {
         if (v == "mel_mask") cfg.separator.mode = model::SeparatorMode::mel_mask;
         else if (v == "direct_mel") cfg.separator.mode = model::SeparatorMode::direct_mel;
         else throw ConfigError("config: key '" + k + "' expects mel_mask or direct_mel, got '" + v + "'");
       }},
      {"separator.encoder_blocks", [&](const std::string& k, const std::string& v) { cfg.separator.encoder_blocks = parse_int(v, k); }},
      {"separator.residual_convs_per_block", [&](const std::string& k, const std::string& v) { cfg.separator.residual_convs_per_block = parse_int(v, k); }},
      {"separator.base_channels", [&](const std::string& k, const std::string& v) { cfg.separator.base_channels = parse_int(v, k); }},
      {"separator.kernel", [&](const std::string& k, const std::string& v) { cfg.separator.kernel = parse_int(v, k); }},
      {"separator.use_svd", [&](const std::string& k, const std::string& v) { cfg.separator.use_svd = parse_bool(v, k); }},
      {"separator.three_conv_residual", [&](const std::string& k, const std::string& v) { cfg.separator.three_conv_residual = parse_bool(v, k); }},
      {"separator.leaky_slope", [&](const std::string& k, const std::string& v) { cfg.separator.leaky_slope = parse_double(v, k); }},
      {"svd.hidden_channels", [&](const std::string& k, const std::string& v) { cfg.svd.hidden_channels = parse_int(v, k); }},
      {"svd.kernel", [&](const std::string& k, const std::string& v) { cfg.svd.kernel = parse_int(v, k); }},
      {"schedule.base_lr", [&](const std::string& k, const std::string& v) { cfg.schedule.base_lr = parse_double(v, k); }},
      {"schedule.decay", [&](const std::string& k, const std::string& v) { cfg.schedule.decay = parse_double(v, k); }},
      {"schedule.interval", [&](const std::string& k, const std::string& v) { cfg.schedule.interval = parse_u64(v, k); }},
      {"train.batch_size", [&](const std::string& k, const std::string& v) { cfg.train.batch_size = parse_int(v, k); }},
      {"train.total_steps", [&](const std::string& k, const std::string& v) { cfg.train.total_steps = parse_u64(v, k); }},
      {"train.checkpoint_every", [&](const std::string& k, const std::string& v) { cfg.train.checkpoint_every = parse_u64(v, k); }},
      {"train.seed", [&](const std::string& k, const std::string& v) { cfg.train.seed = parse_u64(v, k); }},
      {"train.segment_seconds", [&](const std::string& k, const std::string& v) { cfg.train.segment_seconds = parse_double(v, k); }},
      {"train.threads", [&](const std::string& k, const std::string& v) { cfg.train.threads = parse_int(v, k); }},
      {"train.aux_bce", [&](const std::string& k, const std::string& v) { cfg.train.aux_bce = parse_bool(v, k); }},
      {"fixtures.n_train", [&](const std::string& k, const std::string& v) { cfg.fixtures.n_train = parse_int(v, k); }},
      {"fixtures.n_valid", [&](const std::string& k, const std::string& v) { cfg.fixtures.n_valid = parse_int(v, k); }},
      {"fixtures.n_test", [&](const std::string& k, const std::string& v) { cfg.fixtures.n_test = parse_int(v, k); }},
      {"fixtures.clip_seconds", [&](const std::string& k, const std::string& v) { cfg.fixtures.clip_seconds = parse_double(v, k); }},
      {"fixtures.f0_min", [&](const std::string& k, const std::string& v) { cfg.fixtures.f0_min = parse_double(v, k); }},
      {"fixtures.f0_max", [&](const std::string& k, const std::string& v) { cfg.fixtures.f0_max = parse_double(v, k); }},
      {"fixtures.rt60_min", [&](const std::string& k, const std::string& v) { cfg.fixtures.rt60_min = parse_double(v, k); }},
      {"fixtures.rt60_max", [&](const std::string& k, const std::string& v) { cfg.fixtures.rt60_max = parse_double(v, k); }},
      {"paths.data_dir", [&](const std::string&, const std::string& v) { cfg.paths.data_dir = v; }},
      {"paths.manifest", [&](const std::string&, const std::string& v) { cfg.paths.manifest = v; }},
      {"paths.checkpoint", [&](const std::string&, const std::string& v) { cfg.paths.checkpoint = v; }},
  };

  std::istringstream in(text);
  std::string line, section;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string full = section.empty() ? key : section + "." + key;
    const auto it = setters.find(full);
    if (it == setters.end()) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown key '" + full + "'");
    }
    it->second(full, value);
  }

  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str(), path);
}

std::string config_to_text(const PipelineConfig& cfg) {
  std::ostringstream out;
  out << "[audio]\nsample_rate = " << cfg.sample_rate << "\n\n";
  out << "[stft]\nfft_size = " << cfg.stft.fft_size << "\nhop = " << cfg.stft.hop << "\n\n";
  out << "[mel]\nn_mels = " << cfg.mel.n_mels << "\nfmin = " << cfg.mel.fmin
      << "\nfmax = " << cfg.mel.fmax << "\n\n";
  out << "[detection]\nthreshold = " << cfg.detection_threshold << "\n\n";
  out << "[separator]\nmode = "
      << (cfg.separator.mode == model::SeparatorMode::mel_mask ? "mel_mask" : "direct_mel")
      << "\nencoder_blocks = " << cfg.separator.encoder_blocks
      << "\nresidual_convs_per_block = " << cfg.separator.residual_convs_per_block
      << "\nbase_channels = " << cfg.separator.base_channels
      << "\nkernel = " << cfg.separator.kernel
      << "\nuse_svd = " << (cfg.separator.use_svd ? "true" : "false")
      << "\nthree_conv_residual = " << (cfg.separator.three_conv_residual ? "true" : "false")
      << "\nleaky_slope = " << cfg.separator.leaky_slope << "\n\n";
  out << "[svd]\nhidden_channels = " << cfg.svd.hidden_channels
      << "\nkernel = " << cfg.svd.kernel << "\n\n";
  out << "[schedule]\nbase_lr = " << cfg.schedule.base_lr << "\ndecay = " << cfg.schedule.decay
      << "\ninterval = " << cfg.schedule.interval << "\n\n";
  out << "[train]\nbatch_size = " << cfg.train.batch_size
      << "\ntotal_steps = " << cfg.train.total_steps
      << "\ncheckpoint_every = " << cfg.train.checkpoint_every << "\nseed = " << cfg.train.seed
      << "\nsegment_seconds = " << cfg.train.segment_seconds
      << "\nthreads = " << cfg.train.threads
      << "\naux_bce = " << (cfg.train.aux_bce ? "true" : "false") << "\n\n";
  out << "[fixtures]\nn_train = " << cfg.fixtures.n_train << "\nn_valid = " << cfg.fixtures.n_valid
      << "\nn_test = " << cfg.fixtures.n_test << "\nclip_seconds = " << cfg.fixtures.clip_seconds
      << "\nf0_min = " << cfg.fixtures.f0_min << "\nf0_max = " << cfg.fixtures.f0_max
      << "\nrt60_min = " << cfg.fixtures.rt60_min << "\nrt60_max = " << cfg.fixtures.rt60_max
      << "\n";
  return out.str();
}

}  // namespace drysep::pipeline
