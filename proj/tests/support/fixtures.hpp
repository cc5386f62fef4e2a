// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "stssl/common/rng.hpp"
#include "stssl/dataset/sample.hpp"
#include "stssl/model/backbone.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace fixture {

using stssl::Mat;
using stssl::Real;

/// The tiny backbone of the gradient-check suite: embed 16, depth 2.
inline stssl::model::BackboneConfig tiny(stssl::model::Variant variant,
                                         stssl::TaskMode mode = stssl::TaskMode::single_label,
                                         stssl::model::Fusion fusion = stssl::model::Fusion::none) {
  stssl::model::BackboneConfig c;
  c.image_size = 8;
  c.patch_size = 4;
  c.embed_dim = 16;
  c.depth = 2;
  c.num_heads = 2;
  c.mlp_ratio = 2.0;
  c.num_classes = 4;
  c.task_mode = mode;
  c.variant = variant;
  c.fusion = fusion;
  if (variant == stssl::model::Variant::teacher && fusion == stssl::model::Fusion::none) {
    c.fusion = stssl::model::Fusion::early_metatoken;
  }
  return c;
}

inline Mat random_matrix(stssl::Rng& rng, Eigen::Index rows, Eigen::Index cols, double lo = -1.0,
                         double hi = 1.0) {
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  return m;
}

inline Mat random_images(stssl::Rng& rng, int n, const stssl::model::BackboneConfig& c) {
  return random_matrix(rng, n, c.image_width(), 0.0, 1.0);
}

inline stssl::dataset::GeoTemporal random_meta(stssl::Rng& rng, bool with_day = true) {
  stssl::dataset::GeoTemporal m;
  m.latitude = rng.uniform(-90.0, 90.0);
  m.longitude = rng.uniform(-180.0, 180.0);
  if (with_day) m.day_of_year = rng.uniform(0.0, 365.0);
  return m;
}

inline std::vector<stssl::dataset::GeoTemporal> random_metas(stssl::Rng& rng, int n) {
  std::vector<stssl::dataset::GeoTemporal> v;
  for (int i = 0; i < n; ++i) v.push_back(random_meta(rng, i % 3 != 2));
  return v;
}

/// One-hot rows (single-label) or random 0/1 rows (multi-label).
inline Mat random_targets(stssl::Rng& rng, int n, int k, stssl::TaskMode mode) {
  Mat t = Mat::Zero(n, k);
  for (int i = 0; i < n; ++i) {
    if (mode == stssl::TaskMode::single_label) {
      t(i, static_cast<Eigen::Index>(rng.below(k))) = 1.0;
    } else {
      for (int c = 0; c < k; ++c) t(i, c) = rng.bernoulli(0.4) ? 1.0 : 0.0;
    }
  }
  return t;
}

/// Parameters with every tensor (gains and biases included) perturbed, so
/// that no gradient is trivially structured.
inline stssl::model::ParamSnapshot jittered_params(const stssl::model::Backbone& net, std::uint64_t seed,
                                                   double scale = 0.3) {
  auto p = net.init_params(seed);
  stssl::Rng rng(seed ^ 0x5bd1e995ULL);
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (Eigen::Index k = 0; k < p[i].size(); ++k) p[i].data()[k] += scale * rng.uniform(-1.0, 1.0);
  }
  return p;
}

struct GradCheck {
  double worst_relative = 0.0;
  std::string worst_name;
  int checked = 0;
};

/// Central finite differences of loss(params) on up to per_tensor entries of
/// every tensor. Relative error is |a - n| / max(|a|, |n|, floor).
inline GradCheck finite_difference(stssl::model::ParamSnapshot params, const stssl::model::ParamSnapshot& analytic,
                                   const std::function<Real(const stssl::model::ParamSnapshot&)>& loss,
                                   std::uint64_t seed, int per_tensor = 6, double h = 1e-5, double floor = 1e-5) {
  GradCheck r;
  stssl::Rng rng(seed);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Eigen::Index n = params[i].size();
    for (int k = 0; k < std::min<Eigen::Index>(per_tensor, n); ++k) {
      const auto idx = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
      Real& x = params[i].data()[idx];
      const Real saved = x;
      x = saved + h;
      const Real up = loss(params);
      x = saved - h;
      const Real down = loss(params);
      x = saved;
      const Real numeric = (up - down) / (2 * h);
      const Real a = analytic[i].data()[idx];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      ++r.checked;
      if (rel > r.worst_relative) {
        r.worst_relative = rel;
        r.worst_name = params.name(i) + "[" + std::to_string(idx) + "]";
      }
    }
  }
  return r;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("stssl_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixture
