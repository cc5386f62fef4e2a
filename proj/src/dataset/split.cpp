// SPDX-License-Identifier: Apache-2.0
#include "stssl/dataset/split.hpp"

#include "stssl/common/hash.hpp"
#include "stssl/common/rng.hpp"

#include <algorithm>
#include <cmath>

namespace stssl::dataset {

SplitStrategy split_strategy_from_string(const std::string& text) {
  if (text == "stratified") return SplitStrategy::stratified;
  if (text == "exact-per-class") return SplitStrategy::exact_per_class;
  throw Error("unknown split strategy '" + text + "' (expected stratified or exact-per-class)");
}

std::string to_string(SplitStrategy strategy) {
  return strategy == SplitStrategy::stratified ? "stratified" : "exact-per-class";
}

SplitResult split(const DatasetManifest& manifest, const SplitSpec& spec) {
  const int num_classes = manifest.info.num_classes;
  if (spec.strategy == SplitStrategy::stratified &&
      !(spec.labeled_fraction > 0.0 && spec.labeled_fraction <= 1.0)) {
    throw Error("labeled_fraction must lie in (0, 1]");
  }
  if (spec.strategy == SplitStrategy::exact_per_class && spec.labels_per_class < 1) {
    throw Error("labels_per_class must be at least 1");
  }

  // Stratum of each labeled row: its label, or its rarest label when multi-label.
  std::vector<int> frequency(num_classes, 0);
  for (const auto& r : manifest.records) {
    for (int c : r.labels) ++frequency[c];
  }
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const auto& labels = manifest.records[i].labels;
    if (labels.empty()) continue;
    int stratum = labels.front();
    for (int c : labels) {
      if (frequency[c] < frequency[stratum] || (frequency[c] == frequency[stratum] && c < stratum)) {
        stratum = c;
      }
    }
    by_class[stratum].push_back(i);
  }

  std::vector<bool> chosen(manifest.records.size(), false);
  for (int c = 0; c < num_classes; ++c) {
    auto& candidates = by_class[c];
    if (candidates.empty()) {
      if (frequency[c] > 0) continue;  // covered through another stratum
      throw Error("infeasible split: class " + std::to_string(c) + " has no candidates");
    }
    std::size_t take = 0;
    if (spec.strategy == SplitStrategy::stratified) {
      take = static_cast<std::size_t>(std::llround(spec.labeled_fraction * candidates.size()));
      take = std::max<std::size_t>(take, 1);
    } else {
      take = static_cast<std::size_t>(spec.labels_per_class);
      if (take > candidates.size()) {
        throw Error("infeasible split: class " + std::to_string(c) + " has " +
                    std::to_string(candidates.size()) + " samples, " + std::to_string(take) +
                    " requested");
      }
    }
    Rng rng(hash_combine(derive_seed(spec.seed, "split"), static_cast<std::uint64_t>(c)));
    rng.shuffle(candidates);
    for (std::size_t k = 0; k < take; ++k) chosen[candidates[k]] = true;
  }

  SplitResult result;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    (chosen[i] ? result.labeled : result.unlabeled).push_back(manifest.records[i].id);
  }
  return result;
}

}  // namespace stssl::dataset
