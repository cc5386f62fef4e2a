// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "stssl/dataset/manifest.hpp"

#include <vector>

namespace stssl::dataset {

/// Multinomial logistic regression that sees only metadata: one-hot lat/lon
/// grid cells plus one-hot day-of-year bins. Used to measure how much label
/// information the metadata carries.
struct MetadataBaselineResult {
  double accuracy = 0.0;           // logistic predictor on the evaluation rows
  double majority_accuracy = 0.0;  // always predicting the most frequent training class
  double advantage() const { return accuracy - majority_accuracy; }
};

struct MetadataBaselineOptions {
  int lat_bins = 8;
  int lon_bins = 8;
  int day_bins = 12;
  int iterations = 300;
  double learning_rate = 0.5;
  double l2 = 1e-4;
};

/// Fits on the labeled rows of train (single-label: first label index) and
/// scores on the labeled rows of eval. Bin edges come from the training box.
MetadataBaselineResult fit_metadata_baseline(const std::vector<ManifestRecord>& train,
                                             const std::vector<ManifestRecord>& eval,
                                             int num_classes,
                                             const MetadataBaselineOptions& options = {});

}  // namespace stssl::dataset
