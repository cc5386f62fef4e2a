// SPDX-License-Identifier: Apache-2.0
#include "stssl/dataset/manifest.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace stssl::dataset {
namespace {

const std::vector<std::string> kColumns = {"id", "image_path", "labels", "lat", "lon", "day_of_year"};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  return out + "\"";
}

double parse_double(const std::string& text, const std::string& column, std::size_t row) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
    throw Error("manifest row " + std::to_string(row) + ": column '" + column +
                "' is not a finite number: '" + text + "'");
  }
  return value;
}

std::string format_double(double v) {
  // Shortest representation that round-trips exactly.
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".json");
  return p;
}

nlohmann::json info_to_json(const DatasetInfo& info) {
  nlohmann::json j = info.extra.is_object() ? info.extra : nlohmann::json::object();
  j["task_mode"] = to_string(info.task_mode);
  j["num_classes"] = info.num_classes;
  j["image_size"] = info.image_size;
  return j;
}

DatasetInfo info_from_json(const nlohmann::json& j) {
  DatasetInfo info;
  for (const char* key : {"task_mode", "num_classes", "image_size"}) {
    if (!j.contains(key)) throw Error(std::string("dataset sidecar is missing '") + key + "'");
  }
  info.task_mode = task_mode_from_string(j.at("task_mode").get<std::string>());
  info.num_classes = j.at("num_classes").get<int>();
  info.image_size = j.at("image_size").get<int>();
  if (info.num_classes <= 0) throw Error("dataset sidecar: num_classes must be positive");
  if (info.image_size <= 0) throw Error("dataset sidecar: image_size must be positive");
  info.extra = j;
  info.extra.erase("task_mode");
  info.extra.erase("num_classes");
  info.extra.erase("image_size");
  return info;
}

DatasetManifest load_manifest(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw Error("manifest not found: " + csv_path.string());
  const auto sidecar = sidecar_path(csv_path);
  std::ifstream side(sidecar);
  if (!side) throw Error("manifest sidecar not found: " + sidecar.string());

  DatasetManifest manifest;
  try {
    manifest.info = info_from_json(nlohmann::json::parse(side));
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed sidecar " + sidecar.string() + ": " + e.what());
  }
  manifest.root = csv_path.parent_path();

  std::string line;
  if (!std::getline(in, line)) throw Error("manifest is empty: " + csv_path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (split_csv_line(line) != kColumns) {
    throw Error("manifest header must be 'id,image_path,labels,lat,lon,day_of_year'");
  }

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const auto fields = split_csv_line(line);
    if (fields.size() != kColumns.size()) {
      throw Error("manifest row " + std::to_string(row) + ": expected 6 columns, found " +
                  std::to_string(fields.size()));
    }
    ManifestRecord rec;
    rec.id = fields[0];
    rec.image_path = fields[1];
    if (rec.id.empty()) throw Error("manifest row " + std::to_string(row) + ": empty id");
    if (rec.image_path.empty()) throw Error("manifest row " + std::to_string(row) + ": empty image_path");
    if (!fields[2].empty()) {
      std::stringstream labels(fields[2]);
      std::string tok;
      while (std::getline(labels, tok, ';')) {
        int index = -1;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), index);
        if (ec != std::errc{} || ptr != tok.data() + tok.size() || index < 0 ||
            index >= manifest.info.num_classes) {
          throw Error("manifest row " + std::to_string(row) + ": invalid label index '" + tok +
                      "' (num_classes = " + std::to_string(manifest.info.num_classes) + ")");
        }
        rec.labels.push_back(index);
      }
      if (manifest.info.task_mode == TaskMode::single_label && rec.labels.size() != 1) {
        throw Error("manifest row " + std::to_string(row) +
                    ": single-label datasets take exactly one label index");
      }
    }
    rec.meta.latitude = parse_double(fields[3], "lat", row);
    rec.meta.longitude = parse_double(fields[4], "lon", row);
    if (!fields[5].empty()) rec.meta.day_of_year = parse_double(fields[5], "day_of_year", row);
    try {
      validate(rec.meta);
    } catch (const Error& e) {
      throw Error("manifest row " + std::to_string(row) + ": " + e.what());
    }
    if (!std::filesystem::exists(manifest.root / rec.image_path)) {
      throw Error("manifest row " + std::to_string(row) + ": image not found: " + rec.image_path);
    }
    manifest.records.push_back(std::move(rec));
  }
  return manifest;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw Error("cannot write manifest: " + csv_path.string());
  out << "id,image_path,labels,lat,lon,day_of_year\n";
  for (const auto& r : manifest.records) {
    out << csv_escape(r.id) << ',' << csv_escape(r.image_path) << ',';
    for (std::size_t i = 0; i < r.labels.size(); ++i) out << (i ? ";" : "") << r.labels[i];
    out << ',' << format_double(r.meta.latitude) << ',' << format_double(r.meta.longitude) << ',';
    if (r.meta.day_of_year) out << format_double(*r.meta.day_of_year);
    out << '\n';
  }
  std::ofstream side(sidecar_path(csv_path));
  if (!side) throw Error("cannot write sidecar: " + sidecar_path(csv_path).string());
  side << info_to_json(manifest.info).dump(2) << '\n';
  if (!out || !side) throw Error("write failed: " + csv_path.string());
}

}  // namespace stssl::dataset
