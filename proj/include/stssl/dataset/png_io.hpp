// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "stssl/dataset/sample.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace stssl::dataset {

/// Reads an 8-bit PNG as RGB (gray and palette images are expanded, alpha is
/// dropped). Pixels are scaled to [0, 1] as value / 255.
Image read_png(const std::filesystem::path& path);

/// Writes an 8-bit RGB PNG; pixel values are clamped and rounded to 1/255.
void write_png(const std::filesystem::path& path, const Image& image);

/// tEXt chunks as (keyword, text) pairs.
using PngText = std::vector<std::pair<std::string, std::string>>;

/// Raw 8-bit RGB buffer writer used by the plotting code.
void write_png_rgb8(const std::filesystem::path& path, int width, int height,
                    const std::vector<std::uint8_t>& rgb, const PngText& text = {});

/// Rounds every pixel to the nearest 8-bit level, matching a PNG round trip.
void quantize_8bit(Image& image);

}  // namespace stssl::dataset
