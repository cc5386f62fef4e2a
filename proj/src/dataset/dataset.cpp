// SPDX-License-Identifier: Apache-2.0
#include "stssl/dataset/dataset.hpp"

#include "stssl/dataset/png_io.hpp"

#include <cmath>

namespace stssl::dataset {

void validate(const GeoTemporal& meta) {
  if (!std::isfinite(meta.latitude) || meta.latitude < -90.0 || meta.latitude > 90.0) {
    throw Error("latitude " + std::to_string(meta.latitude) + " out of range [-90, 90]");
  }
  if (!std::isfinite(meta.longitude) || meta.longitude < -180.0 || meta.longitude > 180.0) {
    throw Error("longitude " + std::to_string(meta.longitude) + " out of range [-180, 180]");
  }
  if (meta.day_of_year &&
      (!std::isfinite(*meta.day_of_year) || *meta.day_of_year < 0.0 || *meta.day_of_year >= 366.0)) {
    throw Error("day_of_year " + std::to_string(*meta.day_of_year) + " out of range [0, 366)");
  }
}

RowVec label_row(const LabelSet& labels, int num_classes) {
  RowVec row = RowVec::Zero(num_classes);
  for (int c : labels) row[c] = 1.0;
  return row;
}

LoadedDataset::LoadedDataset(DatasetInfo info, std::vector<Sample> samples)
    : info_(std::move(info)), samples_(std::move(samples)) {
  by_id_.reserve(samples_.size());
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!by_id_.emplace(samples_[i].id, i).second) {
      throw Error("duplicate sample id '" + samples_[i].id + "'");
    }
  }
}

std::size_t LoadedDataset::index_of(const std::string& id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) throw Error("unknown sample id '" + id + "'");
  return it->second;
}

std::vector<std::size_t> LoadedDataset::indices_of(const std::vector<std::string>& ids) const {
  std::vector<std::size_t> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(index_of(id));
  return out;
}

Mat LoadedDataset::targets(const std::vector<std::size_t>& indices) const {
  Mat t = Mat::Zero(static_cast<Eigen::Index>(indices.size()), info_.num_classes);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto& s = samples_[indices[r]];
    if (s.label) t.row(static_cast<Eigen::Index>(r)) = label_row(*s.label, info_.num_classes);
  }
  return t;
}

LoadedDataset load_images(const DatasetManifest& manifest) {
  std::vector<Sample> samples;
  samples.reserve(manifest.records.size());
  const int size = manifest.info.image_size;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const auto& rec = manifest.records[i];
    Sample s;
    s.id = rec.id;
    s.image = read_png(manifest.root / rec.image_path);
    if (s.image.height != size || s.image.width != size) {
      throw Error("manifest row " + std::to_string(i + 1) + ": image is " +
                  std::to_string(s.image.height) + "x" + std::to_string(s.image.width) +
                  ", dataset expects " + std::to_string(size) + "x" + std::to_string(size));
    }
    if (!rec.labels.empty()) s.label = rec.labels;
    s.meta = rec.meta;
    samples.push_back(std::move(s));
  }
  return LoadedDataset(manifest.info, std::move(samples));
}

std::vector<ManifestRecord> records_of(const LoadedDataset& data) {
  std::vector<ManifestRecord> out;
  out.reserve(data.size());
  for (const auto& s : data.samples()) {
    ManifestRecord r;
    r.id = s.id;
    r.image_path = "images/" + s.id + ".png";
    if (s.label) r.labels = *s.label;
    r.meta = s.meta;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace stssl::dataset
