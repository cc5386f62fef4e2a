// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "stssl/dataset/sample.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace stssl::dataset {

/// Dataset-level settings stored in the JSON sidecar next to the CSV.
struct DatasetInfo {
  TaskMode task_mode = TaskMode::single_label;
  int num_classes = 0;
  int image_size = 0;
  /// Free-form extra sidecar fields (generator config, notes, config hash).
  nlohmann::json extra = nlohmann::json::object();

  bool operator==(const DatasetInfo& other) const {
    return task_mode == other.task_mode && num_classes == other.num_classes &&
           image_size == other.image_size;
  }
};

struct ManifestRecord {
  std::string id;
  std::string image_path;  // relative to the manifest directory
  LabelSet labels;         // empty for unlabeled rows
  GeoTemporal meta;

  bool operator==(const ManifestRecord&) const = default;
};

struct DatasetManifest {
  DatasetInfo info;
  std::vector<ManifestRecord> records;
  std::filesystem::path root;  // directory image paths resolve against
};

/// Sidecar location for a manifest: same stem, ".json" extension.
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

/// Parses the CSV manifest plus its sidecar. Row order is preserved. Throws
/// Error naming the offending data row (1-based) on any schema violation.
DatasetManifest load_manifest(const std::filesystem::path& csv_path);

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& csv_path);

nlohmann::json info_to_json(const DatasetInfo& info);
DatasetInfo info_from_json(const nlohmann::json& j);

}  // namespace stssl::dataset
