// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "stssl/model/config.hpp"
#include "stssl/model/params.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace stssl::model {

/// Self-describing tensor container.
///
/// Layout (all integers little-endian):
///   8 bytes   magic "STSSLCK1"
///   u32       format version (currently 1)
///   u64       header length N
///   N bytes   UTF-8 JSON header:
///               {"metadata": {...},
///                "tensors": [{"name", "dtype": "float64", "shape": [rows, cols],
///                             "offset", "nbytes"}, ...]}
///             offsets are relative to the start of the payload
///   payload   raw row-major little-endian tensor bytes, in header order
///   u32       CRC-32 (zlib polynomial) of every preceding byte
struct Container {
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<std::string> names;
  std::vector<Mat> tensors;

  void add(std::string name, const Mat& tensor) {
    names.push_back(std::move(name));
    tensors.push_back(tensor);
  }
  /// Index of a tensor, or names.size() when absent.
  std::size_t find(const std::string& name) const;
};

constexpr std::uint32_t kContainerVersion = 1;

/// Writes to a temporary sibling and renames, so a failed write never leaves
/// a truncated file at path.
void write_container(const std::filesystem::path& path, const Container& container);
/// Throws Error on bad magic, unsupported version, or checksum mismatch.
Container read_container(const std::filesystem::path& path);

/// Model-only checkpoint: one parameter set plus its architecture.
struct ModelCheckpoint {
  BackboneConfig config;
  ParamSnapshot params;
  std::int64_t step = 0;
  std::string role;  // "teacher" or "student"
  nlohmann::json extra = nlohmann::json::object();
};

void save_model_checkpoint(const std::filesystem::path& path, const ModelCheckpoint& checkpoint);
ModelCheckpoint load_model_checkpoint(const std::filesystem::path& path);

/// Appends "<prefix><name>" tensors of a snapshot to a container.
void add_snapshot(Container& container, const std::string& prefix, const ParamSnapshot& params);
/// Rebuilds a snapshot with the given layout from "<prefix><name>" tensors.
ParamSnapshot take_snapshot(const Container& container, const std::string& prefix,
                            const std::vector<std::pair<std::string, std::pair<int, int>>>& layout);

}  // namespace stssl::model
