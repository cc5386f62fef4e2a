// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "stssl/common/types.hpp"
#include "stssl/ssl/losses.hpp"

#include <json.hpp>

#include <optional>
#include <vector>

namespace stssl::eval {

/// Precision at each positive in descending-score order, averaged over
/// positives. Ties keep index order. Absent when the column has no positives.
std::optional<Real> average_precision(const ColVec& scores, const ColVec& targets);

struct ApResult {
  std::vector<std::optional<Real>> per_class;
  /// Macro mean over classes that have at least one positive.
  Real map = 0.0;
};

/// Throws Error when no class has a positive.
ApResult mean_average_precision(const Mat& scores, const Mat& targets);

/// Fraction of rows whose argmax score matches the argmax target.
Real accuracy(const Mat& scores, const Mat& targets);

struct PseudoStats {
  /// Share of α-passing slots whose pseudo-target matches ground truth;
  /// absent when nothing passes.
  std::optional<Real> quality;
  /// Share of slots with α > 0.
  Real quantity = 0.0;
};

/// Slots are samples (single-label) or sample-class pairs (multi-label).
PseudoStats pseudo_stats(const ssl::PseudoBatch& pseudo, const Mat& ground_truth);

struct MetricsReport {
  std::size_t num_samples = 0;
  std::vector<std::optional<Real>> per_class_ap;
  Real map = 0.0;
  std::optional<Real> accuracy;  // single-label only
  std::optional<Real> pseudo_quality;
  std::optional<Real> pseudo_quantity;

  /// accuracy for single-label tasks, mAP otherwise.
  Real primary() const { return accuracy ? *accuracy : map; }
};

nlohmann::json to_json(const MetricsReport& report);

}  // namespace stssl::eval
