// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "stssl/dataset/manifest.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace stssl::dataset {

enum class SplitStrategy { stratified, exact_per_class };

struct SplitSpec {
  double labeled_fraction = 0.01;  // used by stratified
  int labels_per_class = 0;        // used by exact_per_class
  SplitStrategy strategy = SplitStrategy::stratified;
  std::uint64_t seed = 0;
};

struct SplitResult {
  std::vector<std::string> labeled;
  std::vector<std::string> unlabeled;
};

/// Partitions the manifest into labeled and unlabeled ids.
///
/// Stratified: class c receives round(fraction * count_c) labeled samples,
/// raised to one when that rounds to zero. Multi-label samples are stratified
/// by their rarest class. Exact-per-class: every class receives exactly
/// labels_per_class samples. Rows that carry no label always land in the
/// unlabeled partition. Output ids keep manifest order.
SplitResult split(const DatasetManifest& manifest, const SplitSpec& spec);

SplitStrategy split_strategy_from_string(const std::string& text);
std::string to_string(SplitStrategy strategy);

}  // namespace stssl::dataset
