// SPDX-License-Identifier: Apache-2.0
#include "stssl/eval/evaluate.hpp"

#include "stssl/dataset/batches.hpp"

#include <algorithm>
#include <numeric>

namespace stssl::eval {

dataset::GeoTemporal MetaOverride::apply(dataset::GeoTemporal meta) const {
  if (latitude) meta.latitude = *latitude;
  if (longitude) meta.longitude = *longitude;
  if (day_of_year) meta.day_of_year = *day_of_year;
  return meta;
}

nlohmann::json to_json(const MetaOverride& o) {
  nlohmann::json j = nlohmann::json::object();
  if (o.latitude) j["latitude"] = *o.latitude;
  if (o.longitude) j["longitude"] = *o.longitude;
  if (o.day_of_year) j["day_of_year"] = *o.day_of_year;
  return j;
}

MetaOverride meta_override_from_json(const nlohmann::json& j) {
  MetaOverride o;
  for (const auto& [key, value] : j.items()) {
    if (key == "latitude") {
      o.latitude = value.get<double>();
    } else if (key == "longitude") {
      o.longitude = value.get<double>();
    } else if (key == "day_of_year") {
      o.day_of_year = value.get<double>();
    } else {
      throw Error("metadata override: unknown key '" + key + "'");
    }
  }
  if (o.latitude.has_value() != o.longitude.has_value()) {
    throw Error("metadata override: latitude and longitude must be given together");
  }
  return o;
}

std::vector<std::size_t> all_indices(const dataset::LoadedDataset& data) {
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

Mat predict(const model::Backbone& net, const model::ParamSnapshot& params, const dataset::LoadedDataset& data,
            const std::vector<std::size_t>& indices, int batch_size, const MetaOverride* override_meta) {
  if (batch_size < 1) throw Error("evaluate: batch size must be positive");
  const auto& cfg = net.config();
  Mat probs(static_cast<Eigen::Index>(indices.size()), cfg.num_classes);
  for (std::size_t start = 0; start < indices.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(indices.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<const dataset::Image*> images;
    std::vector<dataset::GeoTemporal> metas;
    for (std::size_t i = start; i < end; ++i) {
      const auto& s = data[indices[i]];
      images.push_back(&s.image);
      metas.push_back(override_meta ? override_meta->apply(s.meta) : s.meta);
    }
    const auto out = net.forward(params, dataset::stack_images(images), &metas);
    const Mat p = cfg.task_mode == TaskMode::single_label ? model::softmax_rows(out.logits) : model::sigmoid(out.logits);
    probs.middleRows(static_cast<Eigen::Index>(start), p.rows()) = p;
  }
  return probs;
}

MetricsReport score(const Mat& probabilities, const Mat& targets, TaskMode mode) {
  MetricsReport r;
  r.num_samples = static_cast<std::size_t>(probabilities.rows());
  const ApResult ap = mean_average_precision(probabilities, targets);
  r.per_class_ap = ap.per_class;
  r.map = ap.map;
  if (mode == TaskMode::single_label) r.accuracy = accuracy(probabilities, targets);
  return r;
}

MetricsReport evaluate(const model::Backbone& net, const model::ParamSnapshot& params,
                       const dataset::LoadedDataset& data, const std::vector<std::size_t>& indices, int batch_size,
                       const MetaOverride* override_meta) {
  if (indices.empty()) throw Error("evaluate: empty split");
  if (net.config().num_classes != data.info().num_classes) {
    throw Error("evaluate: model has " + std::to_string(net.config().num_classes) + " classes, dataset has " +
                std::to_string(data.info().num_classes));
  }
  for (std::size_t i : indices) {
    if (!data[i].label) throw Error("evaluate: sample '" + data[i].id + "' has no label");
  }
  const Mat probs = predict(net, params, data, indices, batch_size, override_meta);
  return score(probs, data.targets(indices), net.config().task_mode);
}

}  // namespace stssl::eval
