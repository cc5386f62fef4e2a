// SPDX-License-Identifier: Apache-2.0
#include "stssl/eval/probe.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

namespace stssl::eval {

namespace {

std::string format(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double step_value(double lo, double hi, int i, int n) {
  return n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

}  // namespace

GeoBox bounding_box(const std::vector<dataset::GeoTemporal>& metas) {
  if (metas.empty()) throw Error("bounding box of an empty metadata set");
  GeoBox b{metas[0].latitude, metas[0].latitude, metas[0].longitude, metas[0].longitude};
  for (const auto& m : metas) {
    b.lat_min = std::min(b.lat_min, m.latitude);
    b.lat_max = std::max(b.lat_max, m.latitude);
    b.lon_min = std::min(b.lon_min, m.longitude);
    b.lon_max = std::max(b.lon_max, m.longitude);
  }
  return b;
}

ProbeGrid make_probe_grid(const GeoBox& box, const ProbeGridOptions& o) {
  if (o.lat_steps < 1 || o.lon_steps < 1 || o.day_steps < 0 || o.margin < 0) {
    throw Error("probe grid: invalid options");
  }
  ProbeGrid g;
  const double lat_pad = o.margin * (box.lat_max - box.lat_min);
  const double lon_pad = o.margin * (box.lon_max - box.lon_min);
  g.box = {std::max(-90.0, box.lat_min - lat_pad), std::min(90.0, box.lat_max + lat_pad),
           std::max(-180.0, box.lon_min - lon_pad), std::min(180.0, box.lon_max + lon_pad)};
  for (int i = 0; i < o.lat_steps; ++i) {
    for (int j = 0; j < o.lon_steps; ++j) {
      g.points.push_back({step_value(g.box.lat_max, g.box.lat_min, i, o.lat_steps),
                          step_value(g.box.lon_min, g.box.lon_max, j, o.lon_steps), o.spatial_day});
      g.kinds.push_back(ProbeKind::spatial);
    }
  }
  const double lat_c = 0.5 * (box.lat_min + box.lat_max);
  const double lon_c = 0.5 * (box.lon_min + box.lon_max);
  for (int d = 0; d < o.day_steps; ++d) {
    g.points.push_back({lat_c, lon_c, (d + 0.5) * 365.25 / o.day_steps});
    g.kinds.push_back(ProbeKind::temporal);
  }
  return g;
}

ProbeResult prior_probe(const model::Backbone& teacher, const model::ParamSnapshot& params, const ProbeGrid& grid,
                        double constant_value, std::string model_id, int batch_size) {
  if (!teacher.config().uses_metadata()) throw Error("prior probe needs a metadata-consuming teacher");
  const auto& cfg = teacher.config();
  ProbeResult r;
  r.grid = grid;
  r.model_id = std::move(model_id);
  r.confidence.resize(static_cast<Eigen::Index>(grid.points.size()), cfg.num_classes);
  for (std::size_t start = 0; start < grid.points.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(grid.points.size(), start + static_cast<std::size_t>(batch_size));
    const std::vector<dataset::GeoTemporal> metas(grid.points.begin() + static_cast<std::ptrdiff_t>(start),
                                                  grid.points.begin() + static_cast<std::ptrdiff_t>(end));
    const Mat images = Mat::Constant(static_cast<Eigen::Index>(end - start), cfg.image_width(), constant_value);
    const auto out = teacher.forward(params, images, &metas);
    const Mat p = cfg.task_mode == TaskMode::single_label ? model::softmax_rows(out.logits) : model::sigmoid(out.logits);
    r.confidence.middleRows(static_cast<Eigen::Index>(start), p.rows()) = p;
  }
  return r;
}

void write_probe_csv(const std::filesystem::path& path, const ProbeResult& r,
                     const std::vector<std::pair<std::string, std::string>>& comments) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& [key, value] : comments) out << "# " << key << ": " << value << '\n';
  out << "kind,latitude,longitude,day_of_year";
  for (Eigen::Index c = 0; c < r.confidence.cols(); ++c) out << ",class_" << c;
  out << '\n';
  for (std::size_t i = 0; i < r.grid.points.size(); ++i) {
    const auto& m = r.grid.points[i];
    out << (r.grid.kinds[i] == ProbeKind::spatial ? "spatial" : "temporal") << ',' << format(m.latitude) << ','
        << format(m.longitude) << ',' << (m.day_of_year ? format(*m.day_of_year) : std::string());
    for (Eigen::Index c = 0; c < r.confidence.cols(); ++c) {
      out << ',' << format(r.confidence(static_cast<Eigen::Index>(i), c));
    }
    out << '\n';
  }
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace stssl::eval
