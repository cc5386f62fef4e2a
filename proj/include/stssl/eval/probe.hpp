// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "stssl/dataset/sample.hpp"
#include "stssl/model/backbone.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace stssl::eval {

struct GeoBox {
  double lat_min = -90.0;
  double lat_max = 90.0;
  double lon_min = -180.0;
  double lon_max = 180.0;
};

/// Bounding box of a set of metadata records. Throws Error when empty.
GeoBox bounding_box(const std::vector<dataset::GeoTemporal>& metas);

struct ProbeGridOptions {
  int lat_steps = 64;
  int lon_steps = 64;
  int day_steps = 24;
  /// Fraction of the box extent added on every side, clamped to valid ranges.
  double margin = 0.5;
  /// Day paired with the spatial points; absent uses the missing-time input.
  std::optional<double> spatial_day;
};

enum class ProbeKind { spatial, temporal };

struct ProbeGrid {
  std::vector<dataset::GeoTemporal> points;
  std::vector<ProbeKind> kinds;
  GeoBox box;
};

/// lat_steps x lon_steps spatial points over the expanded box, then
/// day_steps temporal points at the centre of the training box.
ProbeGrid make_probe_grid(const GeoBox& training_box, const ProbeGridOptions& options = {});

struct ProbeResult {
  ProbeGrid grid;
  Mat confidence;  // points x num_classes
  std::string model_id;
};

/// Runs the teacher on a constant image paired with every grid point.
ProbeResult prior_probe(const model::Backbone& teacher, const model::ParamSnapshot& params,
                        const ProbeGrid& grid, double constant_value = 0.5, std::string model_id = {},
                        int batch_size = 256);

/// Columns: kind,latitude,longitude,day_of_year,class_0..class_{K-1}.
/// Comments are written first as "# key: value" lines.
void write_probe_csv(const std::filesystem::path& path, const ProbeResult& result,
                     const std::vector<std::pair<std::string, std::string>>& comments = {});

}  // namespace stssl::eval
