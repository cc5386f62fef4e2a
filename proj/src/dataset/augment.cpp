// SPDX-License-Identifier: Apache-2.0
#include "stssl/dataset/augment.hpp"

#include "stssl/common/hash.hpp"
#include "stssl/common/rng.hpp"

#include <algorithm>
#include <cmath>

namespace stssl::dataset {
namespace {

int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

void apply(const HorizontalFlip& t, Image& img, Rng& rng) {
  if (!rng.bernoulli(t.probability)) return;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width / 2; ++x) {
      for (int c = 0; c < img.channels; ++c) std::swap(img.at(y, x, c), img.at(y, img.width - 1 - x, c));
    }
  }
}

void apply(const Translate& t, Image& img, Rng& rng) {
  const int max_dx = static_cast<int>(std::floor(t.max_fraction * img.width));
  const int max_dy = static_cast<int>(std::floor(t.max_fraction * img.height));
  const int dx = static_cast<int>(rng.below(2 * max_dx + 1)) - max_dx;
  const int dy = static_cast<int>(rng.below(2 * max_dy + 1)) - max_dy;
  if (dx == 0 && dy == 0) return;
  const Image src = img;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const int sy = reflect(y - dy, img.height);
      const int sx = reflect(x - dx, img.width);
      for (int c = 0; c < img.channels; ++c) img.at(y, x, c) = src.at(sy, sx, c);
    }
  }
}

void apply(const ColorJitter& t, Image& img, Rng& rng) {
  const float brightness = static_cast<float>(rng.uniform(1.0 - t.brightness, 1.0 + t.brightness));
  const float contrast = static_cast<float>(rng.uniform(1.0 - t.contrast, 1.0 + t.contrast));
  const float saturation = static_cast<float>(rng.uniform(1.0 - t.saturation, 1.0 + t.saturation));
  for (float& v : img.pixels) v = std::clamp(v * brightness, 0.0f, 1.0f);
  // Contrast blends toward the mean gray level, saturation toward per-pixel gray.
  double mean = 0.0;
  for (float v : img.pixels) mean += v;
  mean /= static_cast<double>(img.pixels.size());
  for (float& v : img.pixels) {
    v = std::clamp(static_cast<float>(mean) + contrast * (v - static_cast<float>(mean)), 0.0f, 1.0f);
  }
  if (img.channels == 3) {
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        const float gray = 0.299f * img.at(y, x, 0) + 0.587f * img.at(y, x, 1) + 0.114f * img.at(y, x, 2);
        for (int c = 0; c < 3; ++c) {
          img.at(y, x, c) = std::clamp(gray + saturation * (img.at(y, x, c) - gray), 0.0f, 1.0f);
        }
      }
    }
  }
}

void apply(const Cutout& t, Image& img, Rng& rng) {
  const int max_h = std::max(1, static_cast<int>(std::round(t.max_fraction * img.height)));
  const int max_w = std::max(1, static_cast<int>(std::round(t.max_fraction * img.width)));
  const int h = 1 + static_cast<int>(rng.below(max_h));
  const int w = 1 + static_cast<int>(rng.below(max_w));
  const int y0 = static_cast<int>(rng.below(img.height - h + 1));
  const int x0 = static_cast<int>(rng.below(img.width - w + 1));
  for (int y = y0; y < y0 + h; ++y) {
    for (int x = x0; x < x0 + w; ++x) {
      for (int c = 0; c < img.channels; ++c) img.at(y, x, c) = t.fill;
    }
  }
}

}  // namespace

AugmentationPolicy AugmentationPolicy::fixmatch_default() {
  AugmentationPolicy p;
  p.weak = {HorizontalFlip{0.5}, Translate{0.125}};
  p.strong = {HorizontalFlip{0.5}, Translate{0.125}, ColorJitter{}, Cutout{}};
  return p;
}

std::uint64_t augmentation_seed(std::string_view sample_id, Branch branch, std::uint64_t step_seed) {
  const std::uint64_t base = hash_combine(fnv1a64(sample_id), branch == Branch::weak ? 1 : 2);
  return hash_combine(base, step_seed);
}

Image augment_image(const Image& image, std::string_view sample_id, Branch branch,
                    std::uint64_t step_seed, const AugmentationPolicy& policy) {
  const auto& transforms = branch == Branch::weak ? policy.weak : policy.strong;
  Image out = image;
  if (transforms.empty()) return out;
  Rng rng(augmentation_seed(sample_id, branch, step_seed));
  for (const auto& t : transforms) {
    std::visit([&](const auto& op) { apply(op, out, rng); }, t);
  }
  return out;
}

Sample augment(const Sample& sample, Branch branch, std::uint64_t step_seed,
               const AugmentationPolicy& policy) {
  Sample out;
  out.id = sample.id;
  out.label = sample.label;
  out.meta = sample.meta;
  out.image = augment_image(sample.image, sample.id, branch, step_seed, policy);
  return out;
}

}  // namespace stssl::dataset
