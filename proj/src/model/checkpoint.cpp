#include "drysep/model/checkpoint.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "drysep/errors.hpp"

namespace drysep::model {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* mode_name(SeparatorMode m) {
  return m == SeparatorMode::mel_mask ? "mel_mask" : "direct_mel";
}

SeparatorMode parse_mode(const std::string& s) {
  if (s == "mel_mask") return SeparatorMode::mel_mask;
  if (s == "direct_mel") return SeparatorMode::direct_mel;
  throw ConfigError("checkpoint: unknown separator mode '" + s + "'");
}

}  // namespace

const TensorBlob* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ostringstream header;
  header << kCheckpointMagic << "\n";
  header << "version 1\n";
  header << "mode " << mode_name(ckpt.separator.mode) << "\n";
  header << "encoder_blocks " << ckpt.separator.encoder_blocks << "\n";
  header << "residual_convs_per_block " << ckpt.separator.residual_convs_per_block << "\n";
  header << "base_channels " << ckpt.separator.base_channels << "\n";
  header << "kernel " << ckpt.separator.kernel << "\n";
  header << "use_svd " << (ckpt.separator.use_svd ? 1 : 0) << "\n";
  header << "three_conv_residual " << (ckpt.separator.three_conv_residual ? 1 : 0) << "\n";
  header << "leaky_slope " << fmt_double(ckpt.separator.leaky_slope) << "\n";
  header << "svd_in_channels " << ckpt.svd.in_channels << "\n";
  header << "svd_hidden_channels " << ckpt.svd.hidden_channels << "\n";
  header << "svd_kernel " << ckpt.svd.kernel << "\n";
  header << "norm_min " << fmt_double(ckpt.norm_stats.min) << "\n";
  header << "norm_max " << fmt_double(ckpt.norm_stats.max) << "\n";
  header << "step " << ckpt.step << "\n";
  header << "seed " << ckpt.seed << "\n";
  header << "adam_step " << ckpt.adam_step << "\n";

  size_t offset = 0;  // element offset into the payload, in directory order
  for (const auto& t : ckpt.tensors) {
    header << "tensor " << t.name << " " << offset << " " << t.values.size() << " "
           << t.shape.size();
    for (size_t d : t.shape) header << " " << d;
    header << "\n";
    offset += t.values.size();
  }
  header << "end_header\n";

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("checkpoint: cannot open for writing: " + path);
  const std::string head = header.str();
  f.write(head.data(), static_cast<std::streamsize>(head.size()));
  for (const auto& t : ckpt.tensors) {
    f.write(reinterpret_cast<const char*>(t.values.data()),
            static_cast<std::streamsize>(t.values.size() * sizeof(float)));
  }
  if (!f) throw DataError("checkpoint: short write: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("checkpoint: cannot open: " + path);

  std::string magic;
  if (!std::getline(f, magic) || magic != kCheckpointMagic) {
    throw DataError("checkpoint: bad magic '" + magic + "' (expected " + kCheckpointMagic + "): " +
                    path);
  }

  Checkpoint ckpt;
  std::string line;
  bool saw_end = false;
  std::vector<std::pair<size_t, size_t>> extents;  // offset, count per tensor
  while (std::getline(f, line)) {
    if (line == "end_header") {
      saw_end = true;
      break;
    }
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "version") {
      int v = 0;
      ss >> v;
      if (v != 1) throw DataError("checkpoint: unsupported version " + std::to_string(v));
    } else if (key == "mode") {
      std::string m;
      ss >> m;
      ckpt.separator.mode = parse_mode(m);
    } else if (key == "encoder_blocks") {
      ss >> ckpt.separator.encoder_blocks;
    } else if (key == "residual_convs_per_block") {
      ss >> ckpt.separator.residual_convs_per_block;
    } else if (key == "base_channels") {
      ss >> ckpt.separator.base_channels;
    } else if (key == "kernel") {
      ss >> ckpt.separator.kernel;
    } else if (key == "use_svd") {
      int v = 0;
      ss >> v;
      ckpt.separator.use_svd = v != 0;
    } else if (key == "three_conv_residual") {
      int v = 0;
      ss >> v;
      ckpt.separator.three_conv_residual = v != 0;
    } else if (key == "leaky_slope") {
      ss >> ckpt.separator.leaky_slope;
    } else if (key == "svd_in_channels") {
      ss >> ckpt.svd.in_channels;
    } else if (key == "svd_hidden_channels") {
      ss >> ckpt.svd.hidden_channels;
    } else if (key == "svd_kernel") {
      ss >> ckpt.svd.kernel;
    } else if (key == "norm_min") {
      ss >> ckpt.norm_stats.min;
    } else if (key == "norm_max") {
      ss >> ckpt.norm_stats.max;
    } else if (key == "step") {
      ss >> ckpt.step;
    } else if (key == "seed") {
      ss >> ckpt.seed;
    } else if (key == "adam_step") {
      ss >> ckpt.adam_step;
    } else if (key == "tensor") {
      TensorBlob blob;
      size_t offset = 0, count = 0, ndim = 0;
      ss >> blob.name >> offset >> count >> ndim;
      for (size_t i = 0; i < ndim; ++i) {
        size_t d = 0;
        ss >> d;
        blob.shape.push_back(d);
      }
      if (!ss) throw DataError("checkpoint: malformed tensor directory line: " + line);
      blob.values.resize(count);
      extents.push_back({offset, count});
      ckpt.tensors.push_back(std::move(blob));
    } else {
      throw DataError("checkpoint: unknown header key '" + key + "'");
    }
  }
  if (!saw_end) throw DataError("checkpoint: truncated header (no end_header): " + path);

  const std::streampos payload_start = f.tellg();
  for (size_t i = 0; i < ckpt.tensors.size(); ++i) {
    auto& blob = ckpt.tensors[i];
    f.seekg(payload_start + static_cast<std::streamoff>(extents[i].first * sizeof(float)));
    f.read(reinterpret_cast<char*>(blob.values.data()),
           static_cast<std::streamsize>(extents[i].second * sizeof(float)));
    if (f.gcount() != static_cast<std::streamsize>(extents[i].second * sizeof(float))) {
      throw DataError("checkpoint: truncated payload for tensor '" + blob.name + "': " + path);
    }
  }
  return ckpt;
}

Checkpoint checkpoint_from_model(const SeparationModel<float>& model,
                                 const nn::Adam<float>& adam, const NormStats& stats,
                                 uint64_t step, uint64_t seed) {
  Checkpoint ckpt;
  ckpt.separator = model.separator->config();
  ckpt.svd = model.svd_config();
  ckpt.norm_stats = stats;
  ckpt.step = step;
  ckpt.seed = seed;
  ckpt.adam_step = adam.step_count();

  for (const auto& [name, p] : model.params.items()) {
    ckpt.tensors.push_back({name, p->shape, {p->value.begin(), p->value.end()}});
  }
  for (const auto& [name, state] : model.bn_states) {
    ckpt.tensors.push_back({"state." + name + ".running_mean",
                            {state->running_mean.size()},
                            state->running_mean});
    ckpt.tensors.push_back({"state." + name + ".running_var",
                            {state->running_var.size()},
                            state->running_var});
  }
  for (const auto& [name, p] : model.params.items()) {
    auto it = adam.moments().find(name);
    if (it == adam.moments().end()) continue;
    ckpt.tensors.push_back({"adam.m." + name, p->shape, it->second.m});
    ckpt.tensors.push_back({"adam.v." + name, p->shape, it->second.v});
  }
  return ckpt;
}

void apply_checkpoint(const Checkpoint& ckpt, SeparationModel<float>& model,
                      nn::Adam<float>& adam) {
  std::set<std::string> expected, present;
  for (const auto& [name, p] : model.params.items()) expected.insert(name);
  for (const auto& [name, state] : model.bn_states) {
    expected.insert("state." + name + ".running_mean");
    expected.insert("state." + name + ".running_var");
  }
  for (const auto& t : ckpt.tensors) {
    if (t.name.rfind("adam.", 0) == 0) continue;  // optimizer state is optional
    present.insert(t.name);
  }
  std::string missing, extra;
  for (const auto& n : expected) {
    if (!present.count(n)) missing += " " + n;
  }
  for (const auto& n : present) {
    if (!expected.count(n)) extra += " " + n;
  }
  if (!missing.empty() || !extra.empty()) {
    throw DataError("checkpoint does not match model config;" +
                    (missing.empty() ? std::string() : " absent:" + missing) +
                    (extra.empty() ? std::string() : " extra:" + extra));
  }

  for (const auto& [name, p] : model.params.items()) {
    const TensorBlob* blob = ckpt.find(name);
    if (blob->shape != p->shape || blob->values.size() != p->value.size()) {
      throw DataError("checkpoint: shape mismatch for parameter " + name);
    }
    p->value.assign(blob->values.begin(), blob->values.end());
  }
  for (const auto& [name, state] : model.bn_states) {
    state->running_mean = ckpt.find("state." + name + ".running_mean")->values;
    state->running_var = ckpt.find("state." + name + ".running_var")->values;
  }

  adam.set_step_count(ckpt.adam_step);
  adam.moments().clear();
  for (const auto& [name, p] : model.params.items()) {
    const TensorBlob* m = ckpt.find("adam.m." + name);
    const TensorBlob* v = ckpt.find("adam.v." + name);
    if (m == nullptr || v == nullptr) continue;
    auto& mom = adam.moments()[name];
    mom.m = m->values;
    mom.v = v->values;
  }
}

}  // namespace drysep::model
