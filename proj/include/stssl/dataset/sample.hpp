// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "stssl/common/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace stssl::dataset {

/// Acquisition metadata M = (G, T). A missing day is stored as nullopt, never
/// as zero: zero is a valid winter day.
struct GeoTemporal {
  double latitude = 0.0;
  double longitude = 0.0;
  std::optional<double> day_of_year;

  bool operator==(const GeoTemporal&) const = default;
};

/// Throws Error when latitude/longitude/day fall outside their ranges.
void validate(const GeoTemporal& meta);

/// Height x width x channels image with interleaved (HWC) pixels in [0, 1].
struct Image {
  int height = 0;
  int width = 0;
  int channels = 3;
  std::vector<float> pixels;

  Image() = default;
  Image(int h, int w, int c, float fill = 0.0f)
      : height(h), width(w), channels(c), pixels(static_cast<std::size_t>(h) * w * c, fill) {}

  float& at(int y, int x, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  float at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::size_t size() const { return pixels.size(); }

  bool operator==(const Image&) const = default;
};

/// Class indices attached to a sample. Single-label samples carry exactly one
/// index; multi-label samples carry the set of positive classes.
using LabelSet = std::vector<int>;

struct Sample {
  std::string id;
  Image image;
  std::optional<LabelSet> label;
  GeoTemporal meta;
};

/// Target row for one sample: one-hot (single-label) or multi-hot.
RowVec label_row(const LabelSet& labels, int num_classes);

}  // namespace stssl::dataset
