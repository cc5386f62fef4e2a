// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "stssl/dataset/dataset.hpp"
#include "stssl/dataset/manifest.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace stssl::dataset {

/// Procedural world in which land-cover-like classes depend on where and when
/// an image was taken.
///
/// The lat/lon box is split into Voronoi regions around seeded centers. Class
/// priors are a softmax over region and season terms scaled by the two
/// dependence strengths. Each class has a color and stripe texture; the
/// region shifts the hue and the season shifts brightness, again scaled by the
/// strengths. With both strengths at zero, labels and images are independent
/// of the metadata.
struct SyntheticWorldConfig {
  int num_classes = 10;
  int num_regions = 8;
  int image_size = 16;
  int samples_total = 8000;  // training rows
  int test_samples = 2000;
  TaskMode task_mode = TaskMode::single_label;
  double spatial_dependence_strength = 0.8;
  double seasonal_dependence_strength = 0.8;
  /// 0 = acquisition days uniform over the year; 1 = every region samples
  /// around its own preferred season.
  double sampling_bias = 0.0;
  double label_noise = 0.0;
  std::uint64_t seed = 0;

  double lat_min = -40.0, lat_max = 40.0;
  double lon_min = -100.0, lon_max = 100.0;
  /// Omit acquisition time from every record (EuroSAT-like).
  bool omit_time = false;

  // Appearance knobs.
  double hue_shift_scale = 2.0;  // region hue shift, in units of class hue spacing
  double pixel_noise = 0.15;
  double texture_contrast = 0.2;
  int max_labels_per_sample = 3;  // multi-label only

  void validate() const;
};

nlohmann::json to_json(const SyntheticWorldConfig& config);
SyntheticWorldConfig synthetic_config_from_json(const nlohmann::json& j);

/// The sampled world: region geometry and class/region parameters.
struct SyntheticWorld {
  SyntheticWorldConfig config;
  std::vector<double> center_lat, center_lon;
  std::vector<std::vector<double>> region_prior;  // [region][class]
  std::vector<double> season_amplitude;           // per class
  std::vector<double> season_phase;               // per class, days
  std::vector<double> class_hue, class_orientation, class_frequency, class_season_gain;
  std::vector<double> region_hue_shift, region_mode_day;

  explicit SyntheticWorld(const SyntheticWorldConfig& config);

  int region_of(double lat, double lon) const;
  /// Class probabilities at a location and (optional) day.
  std::vector<double> class_prior(double lat, double lon, std::optional<double> day) const;
  /// Renders one class texture at the given metadata, 8-bit quantized.
  Image render(const LabelSet& classes, const GeoTemporal& meta, std::uint64_t sample_seed) const;
};

struct SyntheticSplit {
  DatasetInfo info;
  std::vector<Sample> train;
  std::vector<Sample> test;
};

/// Generates both splits in memory. Fully determined by the config (seed
/// included); images are quantized exactly as a PNG round trip would.
SyntheticSplit generate_synthetic_samples(const SyntheticWorldConfig& config);

struct GeneratedDataset {
  DatasetManifest train;
  DatasetManifest test;
  std::filesystem::path train_csv;
  std::filesystem::path test_csv;
};

/// Writes images/, train.csv, test.csv and their sidecars under out_dir.
/// Throws Error when the directory cannot be written.
GeneratedDataset generate_synthetic(const SyntheticWorldConfig& config,
                                    const std::filesystem::path& out_dir,
                                    const nlohmann::json& sidecar_extra = nlohmann::json::object());

}  // namespace stssl::dataset
