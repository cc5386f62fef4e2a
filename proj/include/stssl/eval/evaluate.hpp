// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "stssl/dataset/dataset.hpp"
#include "stssl/eval/metrics.hpp"
#include "stssl/model/backbone.hpp"

#include <optional>
#include <vector>

namespace stssl::eval {

/// Replaces some metadata components of every evaluated sample.
struct MetaOverride {
  std::optional<double> latitude;
  std::optional<double> longitude;
  std::optional<double> day_of_year;

  dataset::GeoTemporal apply(dataset::GeoTemporal meta) const;
};

nlohmann::json to_json(const MetaOverride& o);
MetaOverride meta_override_from_json(const nlohmann::json& j);

/// Class probabilities (softmax or sigmoid) for the given samples, one row
/// each, computed in chunks of batch_size.
Mat predict(const model::Backbone& net, const model::ParamSnapshot& params, const dataset::LoadedDataset& data,
            const std::vector<std::size_t>& indices, int batch_size = 64,
            const MetaOverride* override_meta = nullptr);

/// Throws Error on an empty split or a split without labels.
MetricsReport evaluate(const model::Backbone& net, const model::ParamSnapshot& params,
                       const dataset::LoadedDataset& data, const std::vector<std::size_t>& indices,
                       int batch_size = 64, const MetaOverride* override_meta = nullptr);

/// Metrics of precomputed probabilities against targets.
MetricsReport score(const Mat& probabilities, const Mat& targets, TaskMode mode);

/// All indices of a dataset, in order.
std::vector<std::size_t> all_indices(const dataset::LoadedDataset& data);

}  // namespace stssl::eval
