// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "stssl/common/types.hpp"
#include "stssl/dataset/sample.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace stssl::model {

/// Token layout. Teacher: [cls, metatoken, patches...] (early fusion) or
/// [cls, patches...] with the encoded metadata added before the head (late
/// fusion). Student: [cls, distillation, patches...]. Plain: [cls, patches...].
enum class Variant { teacher, student, plain };
enum class Fusion { early_metatoken, late_fusion, none };

std::string to_string(Variant v);
std::string to_string(Fusion f);
Variant variant_from_string(const std::string& text);
Fusion fusion_from_string(const std::string& text);

/// How GeoTemporal records become metadata-encoder inputs.
struct MetaEncoding {
  /// Input used in place of an absent day of year (0.5 = mid-year).
  double missing_time_fill = 0.5;
  /// Replace the fill with a learned scalar parameter.
  bool learn_missing_time = false;
  /// Encode the day as (sin, cos) instead of a plain scalar. Off by default:
  /// the plain scalar bounds how far out of distribution a time can be.
  bool cyclic_day = false;
  /// Ablation switches: a disabled component is fed as a constant zero.
  bool use_geo = true;
  bool use_time = true;

  int input_width() const { return cyclic_day ? 4 : 3; }
  bool operator==(const MetaEncoding&) const = default;
};

struct BackboneConfig {
  int image_size = 32;
  int patch_size = 4;
  int channels = 3;
  int embed_dim = 192;
  int depth = 6;
  int num_heads = 3;
  double mlp_ratio = 4.0;
  int num_classes = 10;
  TaskMode task_mode = TaskMode::single_label;
  Variant variant = Variant::plain;
  Fusion fusion = Fusion::none;
  MetaEncoding meta;

  /// Throws Error on an inconsistent configuration.
  void validate() const;

  int grid() const { return image_size / patch_size; }
  int num_patches() const { return grid() * grid(); }
  int patch_dim() const { return patch_size * patch_size * channels; }
  int head_dim() const { return embed_dim / num_heads; }
  int mlp_hidden() const { return static_cast<int>(embed_dim * mlp_ratio); }
  int image_width() const { return image_size * image_size * channels; }
  /// Tokens in front of the patch tokens (class token plus any special token).
  int num_prefix_tokens() const;
  int seq_len() const { return num_patches() + num_prefix_tokens(); }
  bool has_special_token() const { return num_prefix_tokens() == 2; }
  bool uses_metadata() const { return variant == Variant::teacher; }

  bool operator==(const BackboneConfig&) const = default;
};

nlohmann::json to_json(const BackboneConfig& c);
BackboneConfig backbone_from_json(const nlohmann::json& j);

/// Encoder inputs for a batch of metadata records.
struct MetaInputs {
  Mat values;                     // batch x input_width
  std::vector<char> time_missing; // rows whose time came from the fill value
};

/// lat/90, lon/180, day/365.25; an absent day maps to the configured fill.
RowVec normalize_metadata(const dataset::GeoTemporal& meta, const MetaEncoding& encoding);
MetaInputs meta_inputs(const std::vector<dataset::GeoTemporal>& metas, const MetaEncoding& encoding);

}  // namespace stssl::model
