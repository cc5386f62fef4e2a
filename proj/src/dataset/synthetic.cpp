// SPDX-License-Identifier: Apache-2.0
#include "stssl/dataset/synthetic.hpp"

#include "stssl/common/hash.hpp"
#include "stssl/common/rng.hpp"
#include "stssl/dataset/png_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace stssl::dataset {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kYear = 365.25;
// Prior logit scales at strength 1.
constexpr double kSpatialPriorScale = 3.0;
constexpr double kSeasonalPriorScale = 2.0;

void hsv_to_rgb(double h, double s, double v, double rgb[3]) {
  h = h - std::floor(h);
  const double i = std::floor(h * 6.0);
  const double f = h * 6.0 - i;
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - f * s);
  const double t = v * (1.0 - (1.0 - f) * s);
  switch (static_cast<int>(i) % 6) {
    case 0: rgb[0] = v; rgb[1] = t; rgb[2] = p; break;
    case 1: rgb[0] = q; rgb[1] = v; rgb[2] = p; break;
    case 2: rgb[0] = p; rgb[1] = v; rgb[2] = t; break;
    case 3: rgb[0] = p; rgb[1] = q; rgb[2] = v; break;
    case 4: rgb[0] = t; rgb[1] = p; rgb[2] = v; break;
    default: rgb[0] = v; rgb[1] = p; rgb[2] = q; break;
  }
}

double season_of(std::optional<double> day) {
  if (!day) return 0.0;
  return std::sin(kTwoPi * (*day - 80.0) / kYear);
}

std::string sample_id(const char* split, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%06d", split, index);
  return buf;
}

}  // namespace

void SyntheticWorldConfig::validate() const {
  if (num_classes < 2) throw Error("synthetic: num_classes must be at least 2");
  if (num_regions < 1) throw Error("synthetic: num_regions must be at least 1");
  if (image_size < 4) throw Error("synthetic: image_size must be at least 4");
  if (samples_total < 1) throw Error("synthetic: samples_total must be positive");
  if (test_samples < 0) throw Error("synthetic: test_samples must be non-negative");
  auto unit = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(std::string("synthetic: ") + name + " must lie in [0, 1]");
  };
  unit(spatial_dependence_strength, "spatial_dependence_strength");
  unit(seasonal_dependence_strength, "seasonal_dependence_strength");
  unit(sampling_bias, "sampling_bias");
  if (!(label_noise >= 0.0 && label_noise < 1.0)) throw Error("synthetic: label_noise must lie in [0, 1)");
  if (!(lat_min >= -90 && lat_max <= 90 && lat_min < lat_max)) throw Error("synthetic: bad latitude box");
  if (!(lon_min >= -180 && lon_max <= 180 && lon_min < lon_max)) throw Error("synthetic: bad longitude box");
  if (max_labels_per_sample < 1) throw Error("synthetic: max_labels_per_sample must be positive");
}

nlohmann::json to_json(const SyntheticWorldConfig& c) {
  return {{"num_classes", c.num_classes},
          {"num_regions", c.num_regions},
          {"image_size", c.image_size},
          {"samples_total", c.samples_total},
          {"test_samples", c.test_samples},
          {"task_mode", to_string(c.task_mode)},
          {"spatial_dependence_strength", c.spatial_dependence_strength},
          {"seasonal_dependence_strength", c.seasonal_dependence_strength},
          {"sampling_bias", c.sampling_bias},
          {"label_noise", c.label_noise},
          {"seed", c.seed},
          {"lat_min", c.lat_min},
          {"lat_max", c.lat_max},
          {"lon_min", c.lon_min},
          {"lon_max", c.lon_max},
          {"omit_time", c.omit_time},
          {"hue_shift_scale", c.hue_shift_scale},
          {"pixel_noise", c.pixel_noise},
          {"texture_contrast", c.texture_contrast},
          {"max_labels_per_sample", c.max_labels_per_sample}};
}

SyntheticWorldConfig synthetic_config_from_json(const nlohmann::json& j) {
  SyntheticWorldConfig c;
  const auto defaults = to_json(c);
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) throw Error("synthetic: unknown key '" + key + "'");
  }
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("num_classes", c.num_classes);
  get("num_regions", c.num_regions);
  get("image_size", c.image_size);
  get("samples_total", c.samples_total);
  get("test_samples", c.test_samples);
  if (j.contains("task_mode")) c.task_mode = task_mode_from_string(j.at("task_mode").get<std::string>());
  get("spatial_dependence_strength", c.spatial_dependence_strength);
  get("seasonal_dependence_strength", c.seasonal_dependence_strength);
  get("sampling_bias", c.sampling_bias);
  get("label_noise", c.label_noise);
  get("seed", c.seed);
  get("lat_min", c.lat_min);
  get("lat_max", c.lat_max);
  get("lon_min", c.lon_min);
  get("lon_max", c.lon_max);
  get("omit_time", c.omit_time);
  get("hue_shift_scale", c.hue_shift_scale);
  get("pixel_noise", c.pixel_noise);
  get("texture_contrast", c.texture_contrast);
  get("max_labels_per_sample", c.max_labels_per_sample);
  c.validate();
  return c;
}

SyntheticWorld::SyntheticWorld(const SyntheticWorldConfig& cfg) : config(cfg) {
  cfg.validate();
  const int K = cfg.num_classes;
  const int R = cfg.num_regions;
  Rng rng(derive_seed(cfg.seed, "world"));
  for (int r = 0; r < R; ++r) {
    center_lat.push_back(rng.uniform(cfg.lat_min, cfg.lat_max));
    center_lon.push_back(rng.uniform(cfg.lon_min, cfg.lon_max));
  }
  region_prior.assign(R, std::vector<double>(K, 0.0));
  for (int r = 0; r < R; ++r) {
    for (int c = 0; c < K; ++c) region_prior[r][c] = rng.normal();
  }
  // Class 0 is locked to region 0, like a coastline-bound class.
  for (int r = 0; r < R; ++r) region_prior[r][0] = r == 0 ? 2.0 : -2.0;
  for (int c = 0; c < K; ++c) {
    season_amplitude.push_back(rng.uniform(0.5, 1.0));
    season_phase.push_back(rng.uniform(0.0, kYear));
    class_hue.push_back((c + rng.uniform(-0.15, 0.15)) / K);
    // Orientations stay inside [0, pi/2) so a horizontal flip never maps one
    // class's stripes onto another's.
    class_orientation.push_back((c + rng.uniform(-0.2, 0.2)) * 0.5 * std::numbers::pi / K);
    class_frequency.push_back(0.12 + 0.18 * std::fmod(0.618034 * c, 1.0));
    class_season_gain.push_back(rng.uniform(-1.0, 1.0));
  }
  for (int r = 0; r < R; ++r) {
    region_hue_shift.push_back(rng.uniform(-1.0, 1.0));
    region_mode_day.push_back(rng.uniform(0.0, kYear));
  }
}

int SyntheticWorld::region_of(double lat, double lon) const {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < center_lat.size(); ++r) {
    const double dl = lat - center_lat[r];
    const double dn = lon - center_lon[r];
    const double d = dl * dl + dn * dn;
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(r);
    }
  }
  return best;
}

std::vector<double> SyntheticWorld::class_prior(double lat, double lon, std::optional<double> day) const {
  const int K = config.num_classes;
  const int r = region_of(lat, lon);
  std::vector<double> logits(K);
  for (int c = 0; c < K; ++c) {
    double z = config.spatial_dependence_strength * kSpatialPriorScale * region_prior[r][c];
    if (day) {
      z += config.seasonal_dependence_strength * kSeasonalPriorScale * season_amplitude[c] *
           std::cos(kTwoPi * (*day - season_phase[c]) / kYear);
    }
    logits[c] = z;
  }
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& z : logits) sum += (z = std::exp(z - m));
  for (double& z : logits) z /= sum;
  return logits;
}

Image SyntheticWorld::render(const LabelSet& classes, const GeoTemporal& meta,
                             std::uint64_t sample_seed) const {
  const int n = config.image_size;
  const int K = config.num_classes;
  Rng rng(sample_seed);
  const int region = region_of(meta.latitude, meta.longitude);
  const double season = season_of(meta.day_of_year);
  Image img(n, n, 3);

  auto paint = [&](int c, int y0, int x0, int y1, int x1) {
    const double hue = class_hue[c] + config.spatial_dependence_strength * config.hue_shift_scale *
                                          region_hue_shift[region] / K;
    const double value = 0.6 +
                         config.seasonal_dependence_strength * 0.25 * class_season_gain[c] * season +
                         rng.uniform(-0.08, 0.08);
    const double sat = 0.6 + rng.uniform(-0.1, 0.1);
    const double theta = class_orientation[c] + rng.uniform(-0.05, 0.05);
    const double freq = class_frequency[c];
    const double phase = rng.uniform(0.0, kTwoPi);
    const double ct = std::cos(theta), st = std::sin(theta);
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        const double wave = std::sin(kTwoPi * freq * (x * ct + y * st) + phase);
        double rgb[3];
        hsv_to_rgb(hue, sat, std::clamp(value * (1.0 + config.texture_contrast * wave), 0.0, 1.0), rgb);
        for (int ch = 0; ch < 3; ++ch) img.at(y, x, ch) = static_cast<float>(rgb[ch]);
      }
    }
  };

  if (config.task_mode == TaskMode::single_label || classes.size() == 1) {
    paint(classes.front(), 0, 0, n, n);
  } else {
    // Neutral ground, then one textured rectangle per class.
    for (float& v : img.pixels) v = static_cast<float>(0.45 + rng.uniform(-0.05, 0.05));
    for (int c : classes) {
      const int h = std::max(2, static_cast<int>(std::round(n * rng.uniform(0.4, 0.7))));
      const int w = std::max(2, static_cast<int>(std::round(n * rng.uniform(0.4, 0.7))));
      const int y0 = static_cast<int>(rng.below(n - h + 1));
      const int x0 = static_cast<int>(rng.below(n - w + 1));
      paint(c, y0, x0, y0 + h, x0 + w);
    }
  }
  for (float& v : img.pixels) {
    v = std::clamp(v + static_cast<float>(config.pixel_noise * rng.normal()), 0.0f, 1.0f);
  }
  quantize_8bit(img);
  return img;
}

namespace {

Sample draw_sample(const SyntheticWorld& world, const char* split, int index) {
  const auto& cfg = world.config;
  Rng rng(hash_combine(derive_seed(cfg.seed, split), static_cast<std::uint64_t>(index)));
  Sample s;
  s.id = sample_id(split, index);
  s.meta.latitude = rng.uniform(cfg.lat_min, cfg.lat_max);
  s.meta.longitude = rng.uniform(cfg.lon_min, cfg.lon_max);
  const int region = world.region_of(s.meta.latitude, s.meta.longitude);
  double day = rng.uniform(0.0, 365.0);
  if (rng.bernoulli(cfg.sampling_bias)) {
    day = std::fmod(world.region_mode_day[region] + 20.0 * rng.normal() + 3650.0, 365.0);
  }
  // Quantize to a hundredth of a day so CSV text round-trips stay short.
  day = std::floor(day * 100.0) / 100.0;
  if (!cfg.omit_time) s.meta.day_of_year = day;

  const auto prior = world.class_prior(s.meta.latitude, s.meta.longitude,
                                       cfg.omit_time ? std::nullopt : std::optional<double>(day));
  auto draw_class = [&](const std::vector<double>& p) {
    double u = rng.uniform();
    for (std::size_t c = 0; c < p.size(); ++c) {
      u -= p[c];
      if (u < 0.0) return static_cast<int>(c);
    }
    return static_cast<int>(p.size()) - 1;
  };

  LabelSet classes;
  if (cfg.task_mode == TaskMode::single_label) {
    classes.push_back(draw_class(prior));
  } else {
    int count = 1;
    while (count < cfg.max_labels_per_sample && rng.bernoulli(0.5)) ++count;
    auto p = prior;
    for (int k = 0; k < count; ++k) {
      const int c = draw_class(p);
      classes.push_back(c);
      p[c] = 0.0;
      double sum = 0.0;
      for (double v : p) sum += v;
      if (sum <= 0.0) break;
      for (double& v : p) v /= sum;
    }
    std::sort(classes.begin(), classes.end());
  }
  const std::uint64_t render_seed = rng.next_u64();
  s.image = world.render(classes, s.meta, render_seed);

  LabelSet observed = classes;
  if (cfg.label_noise > 0.0 && rng.bernoulli(cfg.label_noise)) {
    const int noisy = static_cast<int>(rng.below(cfg.num_classes));
    if (cfg.task_mode == TaskMode::single_label) {
      observed = {noisy};
    } else if (std::find(observed.begin(), observed.end(), noisy) == observed.end()) {
      observed.back() = noisy;
      std::sort(observed.begin(), observed.end());
    }
  }
  s.label = observed;
  return s;
}

}  // namespace

SyntheticSplit generate_synthetic_samples(const SyntheticWorldConfig& config) {
  const SyntheticWorld world(config);
  SyntheticSplit out;
  out.info.task_mode = config.task_mode;
  out.info.num_classes = config.num_classes;
  out.info.image_size = config.image_size;
  out.train.reserve(config.samples_total);
  for (int i = 0; i < config.samples_total; ++i) out.train.push_back(draw_sample(world, "train", i));
  out.test.reserve(config.test_samples);
  for (int i = 0; i < config.test_samples; ++i) out.test.push_back(draw_sample(world, "test", i));
  return out;
}

GeneratedDataset generate_synthetic(const SyntheticWorldConfig& config,
                                    const std::filesystem::path& out_dir,
                                    const nlohmann::json& sidecar_extra) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir / "images", ec);
  if (ec) throw Error("cannot create output directory " + out_dir.string() + ": " + ec.message());

  auto data = generate_synthetic_samples(config);
  GeneratedDataset result;
  auto emit = [&](std::vector<Sample>& samples, const char* split, DatasetManifest& manifest,
                  fs::path& csv) {
    manifest.info = data.info;
    manifest.info.extra = sidecar_extra.is_object() ? sidecar_extra : nlohmann::json::object();
    manifest.info.extra["split"] = split;
    manifest.info.extra["synthetic"] = to_json(config);
    manifest.root = out_dir;
    for (auto& s : samples) {
      ManifestRecord r;
      r.id = s.id;
      r.image_path = "images/" + s.id + ".png";
      write_png(out_dir / r.image_path, s.image);
      r.labels = s.label.value_or(LabelSet{});
      r.meta = s.meta;
      manifest.records.push_back(std::move(r));
    }
    csv = out_dir / (std::string(split) + ".csv");
    write_manifest(manifest, csv);
  };
  emit(data.train, "train", result.train, result.train_csv);
  emit(data.test, "test", result.test, result.test_csv);
  return result;
}

}  // namespace stssl::dataset
