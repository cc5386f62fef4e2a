// SPDX-License-Identifier: Apache-2.0
#include "stssl/model/config.hpp"

#include <cmath>
#include <numbers>

namespace stssl::model {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::teacher: return "teacher";
    case Variant::student: return "student";
    case Variant::plain: return "plain";
  }
  return "plain";
}

std::string to_string(Fusion f) {
  switch (f) {
    case Fusion::early_metatoken: return "early-metatoken";
    case Fusion::late_fusion: return "late-fusion";
    case Fusion::none: return "none";
  }
  return "none";
}

Variant variant_from_string(const std::string& text) {
  if (text == "teacher") return Variant::teacher;
  if (text == "student") return Variant::student;
  if (text == "plain") return Variant::plain;
  throw Error("unknown model variant '" + text + "'");
}

Fusion fusion_from_string(const std::string& text) {
  if (text == "early-metatoken") return Fusion::early_metatoken;
  if (text == "late-fusion") return Fusion::late_fusion;
  if (text == "none") return Fusion::none;
  throw Error("unknown fusion '" + text + "'");
}

int BackboneConfig::num_prefix_tokens() const {
  if (variant == Variant::student) return 2;
  if (variant == Variant::teacher && fusion == Fusion::early_metatoken) return 2;
  return 1;
}

void BackboneConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v <= 0) throw Error(std::string("backbone: ") + name + " must be positive");
  };
  positive(image_size, "image_size");
  positive(patch_size, "patch_size");
  positive(channels, "channels");
  positive(embed_dim, "embed_dim");
  positive(depth, "depth");
  positive(num_heads, "num_heads");
  positive(num_classes, "num_classes");
  if (image_size % patch_size != 0) throw Error("backbone: image_size must be divisible by patch_size");
  if (embed_dim % num_heads != 0) throw Error("backbone: embed_dim must be divisible by num_heads");
  if (!(mlp_ratio > 0.0) || mlp_hidden() < 1) throw Error("backbone: mlp_ratio must be positive");
  if (variant == Variant::teacher && fusion == Fusion::none) {
    throw Error("backbone: a teacher needs a fusion mode (early-metatoken or late-fusion)");
  }
  if (variant != Variant::teacher && fusion != Fusion::none) {
    throw Error("backbone: only teachers consume metadata; fusion must be none");
  }
}

nlohmann::json to_json(const BackboneConfig& c) {
  return {{"image_size", c.image_size},
          {"patch_size", c.patch_size},
          {"channels", c.channels},
          {"embed_dim", c.embed_dim},
          {"depth", c.depth},
          {"num_heads", c.num_heads},
          {"mlp_ratio", c.mlp_ratio},
          {"num_classes", c.num_classes},
          {"task_mode", to_string(c.task_mode)},
          {"variant", to_string(c.variant)},
          {"fusion", to_string(c.fusion)},
          {"meta",
           {{"missing_time_fill", c.meta.missing_time_fill},
            {"learn_missing_time", c.meta.learn_missing_time},
            {"cyclic_day", c.meta.cyclic_day},
            {"use_geo", c.meta.use_geo},
            {"use_time", c.meta.use_time}}}};
}

BackboneConfig backbone_from_json(const nlohmann::json& j) {
  BackboneConfig c;
  c.image_size = j.at("image_size").get<int>();
  c.patch_size = j.at("patch_size").get<int>();
  c.channels = j.at("channels").get<int>();
  c.embed_dim = j.at("embed_dim").get<int>();
  c.depth = j.at("depth").get<int>();
  c.num_heads = j.at("num_heads").get<int>();
  c.mlp_ratio = j.at("mlp_ratio").get<double>();
  c.num_classes = j.at("num_classes").get<int>();
  c.task_mode = task_mode_from_string(j.at("task_mode").get<std::string>());
  c.variant = variant_from_string(j.at("variant").get<std::string>());
  c.fusion = fusion_from_string(j.at("fusion").get<std::string>());
  const auto& m = j.at("meta");
  c.meta.missing_time_fill = m.at("missing_time_fill").get<double>();
  c.meta.learn_missing_time = m.at("learn_missing_time").get<bool>();
  c.meta.cyclic_day = m.at("cyclic_day").get<bool>();
  c.meta.use_geo = m.at("use_geo").get<bool>();
  c.meta.use_time = m.at("use_time").get<bool>();
  c.validate();
  return c;
}

RowVec normalize_metadata(const dataset::GeoTemporal& meta, const MetaEncoding& enc) {
  RowVec v = RowVec::Zero(enc.input_width());
  if (enc.use_geo) {
    v[0] = meta.latitude / 90.0;
    v[1] = meta.longitude / 180.0;
  }
  if (!enc.use_time) return v;
  if (enc.cyclic_day) {
    if (meta.day_of_year) {
      const double angle = 2.0 * std::numbers::pi * (*meta.day_of_year / 365.25);
      v[2] = std::sin(angle);
      v[3] = std::cos(angle);
    }
  } else {
    v[2] = meta.day_of_year ? *meta.day_of_year / 365.25 : enc.missing_time_fill;
  }
  return v;
}

MetaInputs meta_inputs(const std::vector<dataset::GeoTemporal>& metas, const MetaEncoding& enc) {
  MetaInputs in;
  in.values.resize(static_cast<Eigen::Index>(metas.size()), enc.input_width());
  in.time_missing.resize(metas.size(), 0);
  for (std::size_t i = 0; i < metas.size(); ++i) {
    in.values.row(static_cast<Eigen::Index>(i)) = normalize_metadata(metas[i], enc);
    in.time_missing[i] = enc.use_time && !metas[i].day_of_year;
  }
  return in;
}

}  // namespace stssl::model
