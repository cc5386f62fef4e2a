// SPDX-License-Identifier: Apache-2.0
#include "stssl/dataset/metadata_baseline.hpp"

#include <algorithm>
#include <cmath>

namespace stssl::dataset {
namespace {

struct Box {
  double lat_min, lat_max, lon_min, lon_max;
};

int bin(double v, double lo, double hi, int bins) {
  if (hi <= lo) return 0;
  const int b = static_cast<int>(std::floor((v - lo) / (hi - lo) * bins));
  return std::clamp(b, 0, bins - 1);
}

// Active feature indices: one lat/lon cell, one day bin (or the "no day" slot).
std::pair<int, int> features(const GeoTemporal& m, const Box& box, const MetadataBaselineOptions& o) {
  const int cell = bin(m.latitude, box.lat_min, box.lat_max, o.lat_bins) * o.lon_bins +
                   bin(m.longitude, box.lon_min, box.lon_max, o.lon_bins);
  const int day = m.day_of_year ? bin(*m.day_of_year, 0.0, 366.0, o.day_bins) : o.day_bins;
  return {cell, o.lat_bins * o.lon_bins + day};
}

}  // namespace

MetadataBaselineResult fit_metadata_baseline(const std::vector<ManifestRecord>& train,
                                             const std::vector<ManifestRecord>& eval,
                                             int num_classes, const MetadataBaselineOptions& o) {
  std::vector<const ManifestRecord*> rows;
  for (const auto& r : train) {
    if (!r.labels.empty()) rows.push_back(&r);
  }
  if (rows.empty()) throw Error("metadata baseline: no labeled training rows");
  Box box{rows.front()->meta.latitude, rows.front()->meta.latitude, rows.front()->meta.longitude,
          rows.front()->meta.longitude};
  for (const auto* r : rows) {
    box.lat_min = std::min(box.lat_min, r->meta.latitude);
    box.lat_max = std::max(box.lat_max, r->meta.latitude);
    box.lon_min = std::min(box.lon_min, r->meta.longitude);
    box.lon_max = std::max(box.lon_max, r->meta.longitude);
  }

  const int num_features = o.lat_bins * o.lon_bins + o.day_bins + 1;
  Mat weights = Mat::Zero(num_features, num_classes);
  RowVec bias = RowVec::Zero(num_classes);
  std::vector<int> counts(num_classes, 0);
  std::vector<std::pair<int, int>> feats;
  for (const auto* r : rows) {
    ++counts[r->labels.front()];
    feats.push_back(features(r->meta, box, o));
  }
  const int majority = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());

  // Full-batch gradient descent on the mean cross-entropy.
  const double n = static_cast<double>(rows.size());
  for (int it = 0; it < o.iterations; ++it) {
    Mat grad_w = Mat::Zero(num_features, num_classes);
    RowVec grad_b = RowVec::Zero(num_classes);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      RowVec z = bias + weights.row(feats[i].first) + weights.row(feats[i].second);
      z.array() -= z.maxCoeff();
      z = z.array().exp();
      z /= z.sum();
      z[rows[i]->labels.front()] -= 1.0;
      grad_b += z;
      grad_w.row(feats[i].first) += z;
      grad_w.row(feats[i].second) += z;
    }
    weights -= o.learning_rate * (grad_w / n + o.l2 * weights);
    bias -= o.learning_rate * grad_b / n;
  }

  MetadataBaselineResult result;
  int correct = 0, majority_correct = 0, total = 0;
  for (const auto& r : eval) {
    if (r.labels.empty()) continue;
    const auto f = features(r.meta, box, o);
    const RowVec z = bias + weights.row(f.first) + weights.row(f.second);
    Eigen::Index pred = 0;
    z.maxCoeff(&pred);
    correct += static_cast<int>(pred) == r.labels.front();
    majority_correct += majority == r.labels.front();
    ++total;
  }
  if (total == 0) throw Error("metadata baseline: no labeled evaluation rows");
  result.accuracy = static_cast<double>(correct) / total;
  result.majority_accuracy = static_cast<double>(majority_correct) / total;
  return result;
}

}  // namespace stssl::dataset
