#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pointcvar/core.hpp"

namespace pcvar {

// Cloud files are plain CSV, one point per line: "x,y,z" or
// "x,y,z,provenance" with provenance in {clean, outlier} (also 0/1).
// Coordinates are written with 17 significant digits so a round trip is
// exact. Blank lines and lines starting with '#' are ignored.
PointCloud load_cloud(const std::filesystem::path& path);
void save_cloud(const PointCloud& cloud, const std::filesystem::path& path);

PointCloud parse_cloud(const std::string& text, const std::string& source_name = "<string>");
std::string format_cloud(const PointCloud& cloud);

struct ManifestEntry {
  std::string path;
  int label = 0;
  Split split = Split::Train;
};

// Manifest: JSON lines, {"path": ..., "label": ..., "split": "train"|"test"}.
// Relative paths resolve against the manifest's directory.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);
void save_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& path);

/// Writes every cloud as <dir>/<prefix><index>.csv and appends entries to
/// `manifest` (paths relative to dir).
void save_dataset_clouds(const Dataset& data, const std::filesystem::path& dir,
                         const std::string& prefix, std::vector<ManifestEntry>& manifest);

/// Loads the clouds of one split listed in a manifest. Class names come from
/// the sibling classes.json when present, otherwise "class<k>".
Dataset load_dataset(const std::filesystem::path& manifest_path, Split split);

void save_class_names(const std::vector<std::string>& names, const std::filesystem::path& dir);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace pcvar
