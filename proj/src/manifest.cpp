#include "drysep/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "drysep/errors.hpp"

namespace fs = std::filesystem;

namespace drysep {

const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
  }
  return "?";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "valid") return Split::valid;
  if (s == "test") return Split::test;
  throw DataError("unknown split tag '" + s + "' (expected train, valid or test)");
}

std::vector<const ManifestEntry*> DatasetManifest::split_entries(Split s) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries) {
    if (e.split == s) out.push_back(&e);
  }
  return out;
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open manifest: " + path);
  const fs::path base = fs::path(path).parent_path();

  auto resolve = [&](const std::string& p) -> std::string {
    fs::path fp(p);
    if (fp.is_absolute() || base.empty()) return p;
    return (base / fp).string();
  };

  DatasetManifest manifest;
  std::string line;
  size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    if (fields.size() < 4) {
      throw DataError("manifest line " + std::to_string(lineno) +
                      ": expected at least 4 tab-separated fields, got " +
                      std::to_string(fields.size()));
    }
    ManifestEntry entry;
    if (fields[0].empty()) {
      throw DataError("manifest line " + std::to_string(lineno) + ": empty voice path");
    }
    entry.voice_path = resolve(fields[0]);
    entry.srir_path = fields[1] == "-" ? std::string() : resolve(fields[1]);
    try {
      entry.split = parse_split(fields[2]);
    } catch (const DataError& e) {
      throw DataError("manifest line " + std::to_string(lineno) + ": " + e.what());
    }
    for (size_t i = 3; i < fields.size(); ++i) {
      if (fields[i].empty()) {
        throw DataError("manifest line " + std::to_string(lineno) + ": empty accompaniment path");
      }
      entry.accompaniment_paths.push_back(resolve(fields[i]));
    }
    manifest.entries.push_back(std::move(entry));
  }
  return manifest;
}

void save_manifest(const std::string& path, const DatasetManifest& manifest) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot write manifest: " + path);
  for (const auto& e : manifest.entries) {
    f << e.voice_path << '\t' << (e.has_srir() ? e.srir_path : "-") << '\t'
      << split_name(e.split);
    for (const auto& a : e.accompaniment_paths) f << '\t' << a;
    f << '\n';
  }
}

}  // namespace drysep
