// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "stssl/dataset/manifest.hpp"
#include "stssl/dataset/sample.hpp"

#include <string>
#include <unordered_map>
#include <vector>

namespace stssl::dataset {

/// A manifest with every image decoded into memory.
class LoadedDataset {
 public:
  LoadedDataset() = default;
  LoadedDataset(DatasetInfo info, std::vector<Sample> samples);

  const DatasetInfo& info() const { return info_; }
  const std::vector<Sample>& samples() const { return samples_; }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  std::size_t size() const { return samples_.size(); }

  /// Index of the sample with this id; throws Error when absent.
  std::size_t index_of(const std::string& id) const;
  std::vector<std::size_t> indices_of(const std::vector<std::string>& ids) const;

  /// Target matrix (rows x num_classes) for the given samples; rows of
  /// unlabeled samples are zero.
  Mat targets(const std::vector<std::size_t>& indices) const;

 private:
  DatasetInfo info_;
  std::vector<Sample> samples_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

/// Decodes all images referenced by the manifest. Image dims must match the
/// sidecar's image_size exactly.
LoadedDataset load_images(const DatasetManifest& manifest);

/// Manifest records of an in-memory dataset (image paths synthesized from ids).
std::vector<ManifestRecord> records_of(const LoadedDataset& data);

}  // namespace stssl::dataset
