// SPDX-License-Identifier: Apache-2.0
#include "stssl/eval/metrics.hpp"

#include <algorithm>
#include <numeric>

namespace stssl::eval {

std::optional<Real> average_precision(const ColVec& scores, const ColVec& targets) {
  if (scores.size() != targets.size()) throw Error("average precision: scores and targets differ in length");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return scores[a] > scores[b]; });
  Real sum = 0.0;
  int positives = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (targets[order[rank]] > 0.5) {
      ++positives;
      sum += static_cast<Real>(positives) / static_cast<Real>(rank + 1);
    }
  }
  if (positives == 0) return std::nullopt;
  return sum / positives;
}

ApResult mean_average_precision(const Mat& scores, const Mat& targets) {
  if (scores.rows() != targets.rows() || scores.cols() != targets.cols()) {
    throw Error("mAP: scores and targets are misaligned");
  }
  ApResult r;
  Real sum = 0.0;
  int counted = 0;
  for (Eigen::Index c = 0; c < scores.cols(); ++c) {
    r.per_class.push_back(average_precision(scores.col(c), targets.col(c)));
    if (r.per_class.back()) {
      sum += *r.per_class.back();
      ++counted;
    }
  }
  if (counted == 0) throw Error("mAP: no class has a positive sample");
  r.map = sum / counted;
  return r;
}

Real accuracy(const Mat& scores, const Mat& targets) {
  if (scores.rows() != targets.rows() || scores.cols() != targets.cols()) {
    throw Error("accuracy: scores and targets are misaligned");
  }
  if (scores.rows() == 0) throw Error("accuracy: empty batch");
  Eigen::Index hits = 0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index predicted = 0, truth = 0;
    scores.row(i).maxCoeff(&predicted);
    targets.row(i).maxCoeff(&truth);
    hits += predicted == truth;
  }
  return static_cast<Real>(hits) / static_cast<Real>(scores.rows());
}

PseudoStats pseudo_stats(const ssl::PseudoBatch& pseudo, const Mat& ground_truth) {
  const auto n = pseudo.targets.rows();
  if (ground_truth.rows() != n || ground_truth.cols() != pseudo.targets.cols()) {
    throw Error("pseudo stats: ground truth misaligned");
  }
  PseudoStats s;
  if (n == 0) return s;
  const bool per_sample = pseudo.weights.cols() == 1;
  Eigen::Index passing = 0, correct = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (per_sample) {
      if (!(pseudo.weights(i, 0) > 0)) continue;
      ++passing;
      Eigen::Index target = 0, truth = 0;
      pseudo.targets.row(i).maxCoeff(&target);
      ground_truth.row(i).maxCoeff(&truth);
      correct += target == truth;
    } else {
      for (Eigen::Index c = 0; c < pseudo.weights.cols(); ++c) {
        if (!(pseudo.weights(i, c) > 0)) continue;
        ++passing;
        correct += (pseudo.targets(i, c) > 0.5) == (ground_truth(i, c) > 0.5);
      }
    }
  }
  const auto slots = static_cast<Real>(pseudo.weights.size());
  s.quantity = static_cast<Real>(passing) / slots;
  if (passing > 0) s.quality = static_cast<Real>(correct) / static_cast<Real>(passing);
  return s;
}

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json ap = nlohmann::json::array();
  for (const auto& v : r.per_class_ap) ap.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
  nlohmann::json j{{"num_samples", r.num_samples}, {"per_class_ap", ap}, {"map", r.map}};
  if (r.accuracy) j["accuracy"] = *r.accuracy;
  if (r.pseudo_quality) j["pseudo_quality"] = *r.pseudo_quality;
  if (r.pseudo_quantity) j["pseudo_quantity"] = *r.pseudo_quantity;
  return j;
}

}  // namespace stssl::eval
