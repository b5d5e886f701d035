#pragma once

#include <string>
#include <vector>

namespace drysep {

enum class Split { train, valid, test };

const char* split_name(Split s);
Split parse_split(const std::string& s);  // throws DataError on unknown tag

struct ManifestEntry {
  std::string voice_path;
  std::string srir_path;  // empty when the record had "-"
  Split split = Split::train;
  std::vector<std::string> accompaniment_paths;  // at least one

  bool has_srir() const { return !srir_path.empty(); }
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;

  std::vector<const ManifestEntry*> split_entries(Split s) const;
  size_t count(Split s) const { return split_entries(s).size(); }
};

// One record per line, tab-separated:
//   voice_path <TAB> srir_path ("-" if absent) <TAB> split <TAB> acc_path [<TAB> acc_path ...]
// Relative paths are resolved against the manifest's directory.
DatasetManifest load_manifest(const std::string& path);

void save_manifest(const std::string& path, const DatasetManifest& manifest);

}  // namespace drysep
