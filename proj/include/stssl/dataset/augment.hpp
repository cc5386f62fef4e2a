// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "stssl/dataset/sample.hpp"

#include <cstdint>
#include <string_view>
#include <variant>
#include <vector>

namespace stssl::dataset {

enum class Branch { weak, strong };

struct HorizontalFlip {
  double probability = 0.5;
};

/// Integer shift of up to max_fraction * size pixels per axis, reflect padded.
struct Translate {
  double max_fraction = 0.125;
};

/// Brightness, contrast and saturation factors drawn from [1 - s, 1 + s].
struct ColorJitter {
  double brightness = 0.4;
  double contrast = 0.4;
  double saturation = 0.4;
};

/// One gray rectangle with side up to max_fraction * size.
struct Cutout {
  double max_fraction = 0.5;
  float fill = 0.5f;
};

using Transform = std::variant<HorizontalFlip, Translate, ColorJitter, Cutout>;

struct AugmentationPolicy {
  std::vector<Transform> weak;
  std::vector<Transform> strong;

  static AugmentationPolicy identity() { return {}; }
  /// Weak: flip + translate. Strong: the weak ops, then color jitter and cutout.
  static AugmentationPolicy fixmatch_default();
};

/// Random stream for one (sample id, branch, step) key. Augmentation output
/// depends on nothing else, so results are independent of worker scheduling.
std::uint64_t augmentation_seed(std::string_view sample_id, Branch branch, std::uint64_t step_seed);

Image augment_image(const Image& image, std::string_view sample_id, Branch branch,
                    std::uint64_t step_seed, const AugmentationPolicy& policy);

/// Label, metadata and id pass through untouched.
Sample augment(const Sample& sample, Branch branch, std::uint64_t step_seed,
               const AugmentationPolicy& policy);

}  // namespace stssl::dataset
