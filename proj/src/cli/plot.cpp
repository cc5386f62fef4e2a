// SPDX-License-Identifier: Apache-2.0
#include "stssl/cli/plot.hpp"

#include "stssl/common/types.hpp"
#include "stssl/dataset/png_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace stssl::cli {

namespace {

using Rgb = std::array<std::uint8_t, 3>;

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && s[b] == ' ') ++b;
  return s.substr(b);
}

double number(const std::string& text, const std::filesystem::path& path, std::size_t row) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw Error(path.string() + ": row " + std::to_string(row + 1) + ": '" + text + "' is not a number");
  }
}

struct Canvas {
  int width, height;
  std::vector<std::uint8_t> rgb;

  Canvas(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 255) {}

  void set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    auto* p = &rgb[(static_cast<std::size_t>(y) * width + x) * 3];
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
  }

  void fill(int x0, int y0, int w, int h, Rgb c) {
    for (int y = y0; y < y0 + h; ++y) {
      for (int x = x0; x < x0 + w; ++x) set(x, y, c);
    }
  }

  void frame(int x0, int y0, int w, int h, Rgb c) {
    for (int x = x0; x < x0 + w; ++x) {
      set(x, y0, c);
      set(x, y0 + h - 1, c);
    }
    for (int y = y0; y < y0 + h; ++y) {
      set(x0, y, c);
      set(x0 + w - 1, y, c);
    }
  }

  void line(int x0, int y0, int x1, int y1, Rgb c) {
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
      set(x0, y0, c);
      set(x0, y0 + 1, c);
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y0 += sy;
      }
    }
  }
};

// Piecewise-linear approximation of a perceptual blue-green-yellow colormap.
Rgb colormap(double t) {
  static const std::array<std::array<double, 3>, 5> stops{{{68, 1, 84}, {59, 82, 139}, {33, 145, 140},
                                                           {94, 201, 98}, {253, 231, 37}}};
  t = std::clamp(t, 0.0, 1.0) * (stops.size() - 1);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), stops.size() - 2);
  const double f = t - static_cast<double>(i);
  Rgb out;
  for (int k = 0; k < 3; ++k) {
    out[k] = static_cast<std::uint8_t>(std::lround(stops[i][k] + f * (stops[i + 1][k] - stops[i][k])));
  }
  return out;
}

const std::array<Rgb, 8> kPalette{{{31, 119, 180}, {255, 127, 14}, {44, 160, 44}, {214, 39, 40},
                                   {148, 103, 189}, {140, 86, 75}, {227, 119, 194}, {127, 127, 127}}};
constexpr Rgb kAxis{40, 40, 40};
constexpr Rgb kGrid{225, 225, 225};

dataset::PngText png_text(const CsvTable& t, const std::string& title) {
  dataset::PngText text{{"Title", title}};
  for (const auto& [key, value] : t.comments) text.emplace_back(key, value);
  return text;
}

void save(const std::filesystem::path& png, const Canvas& c, const dataset::PngText& text) {
  if (png.has_parent_path()) std::filesystem::create_directories(png.parent_path());
  auto tmp = png;
  tmp += ".tmp";
  try {
    dataset::write_png_rgb8(tmp, c.width, c.height, c.rgb, text);
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove(tmp, ec);
    throw;
  }
  std::filesystem::rename(tmp, png);
}

// Value axis [0, 1] plotted into a panel with light grid lines.
void draw_panel(Canvas& c, int x0, int y0, int w, int h, double step_lo, double step_hi,
                const std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>>& series,
                const std::map<std::string, Rgb>& colors) {
  for (int g = 1; g < 4; ++g) {
    const int y = y0 + h - 1 - static_cast<int>(std::lround(g * 0.25 * (h - 1)));
    for (int x = x0; x < x0 + w; ++x) c.set(x, y, kGrid);
  }
  const double span = step_hi > step_lo ? step_hi - step_lo : 1.0;
  auto px = [&](double s) { return x0 + static_cast<int>(std::lround((s - step_lo) / span * (w - 1))); };
  auto py = [&](double v) { return y0 + h - 1 - static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * (h - 1))); };
  for (const auto& [name, points] : series) {
    const Rgb col = colors.at(name);
    for (std::size_t i = 0; i < points.size(); ++i) {
      const int x = px(points[i].first), y = py(points[i].second);
      if (i == 0) {
        c.fill(x - 1, y - 1, 3, 3, col);
      } else {
        c.line(px(points[i - 1].first), py(points[i - 1].second), x, y, col);
      }
    }
  }
  c.frame(x0, y0, w, h, kAxis);
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw Error("CSV has no column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

bool CsvTable::has_column(const std::string& name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  CsvTable t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto body = trim(line.substr(1));
      const auto colon = body.find(':');
      if (colon != std::string::npos) t.comments.emplace_back(trim(body.substr(0, colon)), trim(body.substr(colon + 1)));
      continue;
    }
    auto fields = split_fields(line);
    for (auto& f : fields) f = trim(f);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw Error(path.string() + ": line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                  " fields, expected " + std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(fields));
  }
  if (t.header.empty() || t.rows.empty()) throw Error(path.string() + ": CSV has no data rows");
  return t;
}

std::pair<int, int> plot_probe_heatmap(const std::filesystem::path& csv, const std::filesystem::path& png,
                                       int class_index, int cell_px) {
  if (cell_px < 1) throw Error("cell size must be positive");
  const auto t = read_csv(csv);
  const auto kind = t.column("kind"), lat = t.column("latitude"), lon = t.column("longitude");
  const std::string cname = "class_" + std::to_string(class_index);
  if (!t.has_column(cname)) throw Error(csv.string() + ": no column " + cname);
  const auto value = t.column(cname);

  std::set<double, std::greater<>> lats;
  std::set<double> lons;
  std::vector<std::array<double, 3>> cells;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r][kind] != "spatial") continue;
    const double a = number(t.rows[r][lat], csv, r), o = number(t.rows[r][lon], csv, r);
    lats.insert(a);
    lons.insert(o);
    cells.push_back({a, o, number(t.rows[r][value], csv, r)});
  }
  if (cells.empty()) throw Error(csv.string() + ": no spatial probe rows");
  const int rows = static_cast<int>(lats.size()), cols = static_cast<int>(lons.size());
  if (cells.size() != static_cast<std::size_t>(rows) * cols) {
    throw Error(csv.string() + ": spatial rows do not form a complete lat/lon grid");
  }
  double lo = cells[0][2], hi = cells[0][2];
  for (const auto& c : cells) {
    lo = std::min(lo, c[2]);
    hi = std::max(hi, c[2]);
  }
  const double range = hi > lo ? hi - lo : 1.0;

  const int pad = 8, bar_w = 12, gap = 8;
  const int map_w = cols * cell_px, map_h = rows * cell_px;
  Canvas canvas(pad + map_w + gap + bar_w + pad, pad + map_h + pad);
  const std::vector<double> lat_list(lats.begin(), lats.end());
  const std::vector<double> lon_list(lons.begin(), lons.end());
  for (const auto& c : cells) {
    const int i = static_cast<int>(std::lower_bound(lat_list.begin(), lat_list.end(), c[0], std::greater<>()) -
                                   lat_list.begin());
    const int j = static_cast<int>(std::lower_bound(lon_list.begin(), lon_list.end(), c[1]) - lon_list.begin());
    canvas.fill(pad + j * cell_px, pad + i * cell_px, cell_px, cell_px, colormap((c[2] - lo) / range));
  }
  canvas.frame(pad - 1, pad - 1, map_w + 2, map_h + 2, kAxis);
  const int bar_x = pad + map_w + gap;
  for (int y = 0; y < map_h; ++y) {
    const double f = map_h == 1 ? 1.0 : 1.0 - static_cast<double>(y) / (map_h - 1);
    canvas.fill(bar_x, pad + y, bar_w, 1, colormap(f));
  }
  canvas.frame(bar_x - 1, pad - 1, bar_w + 2, map_h + 2, kAxis);

  auto text = png_text(t, "prior probe " + cname);
  text.emplace_back("Range", std::to_string(lo) + " .. " + std::to_string(hi));
  save(png, canvas, text);
  return {rows, cols};
}

void plot_quality_curves(const std::filesystem::path& csv, const std::filesystem::path& png) {
  const auto t = read_csv(csv);
  const auto step = t.column("step"), series = t.column("series"), quality = t.column("quality"),
             quantity = t.column("quantity");
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::pair<double, double>>> qual, quan;
  double lo = 0.0, hi = 0.0;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const double s = number(row[step], csv, r);
    if (r == 0) lo = hi = s;
    lo = std::min(lo, s);
    hi = std::max(hi, s);
    if (std::find(order.begin(), order.end(), row[series]) == order.end()) order.push_back(row[series]);
    if (!row[quality].empty()) qual[row[series]].emplace_back(s, number(row[quality], csv, r));
    quan[row[series]].emplace_back(s, number(row[quantity], csv, r));
  }
  std::map<std::string, Rgb> colors;
  std::string legend;
  for (std::size_t i = 0; i < order.size(); ++i) {
    colors[order[i]] = kPalette[i % kPalette.size()];
    const auto& c = colors[order[i]];
    legend += (i ? "; " : "") + order[i] + "=rgb(" + std::to_string(c[0]) + "," + std::to_string(c[1]) + "," +
              std::to_string(c[2]) + ")";
  }
  auto collect = [&](auto& m) {
    std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>> out;
    for (const auto& name : order) {
      auto pts = m[name];
      std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      out.emplace_back(name, std::move(pts));
    }
    return out;
  };

  const int pad = 12, panel_w = 480, panel_h = 200, legend_h = 14;
  Canvas canvas(pad + panel_w + pad, pad + legend_h + panel_h + pad + panel_h + pad);
  for (std::size_t i = 0; i < order.size(); ++i) {
    canvas.fill(pad + static_cast<int>(i) * 24, pad, 16, 8, colors[order[i]]);
  }
  const int top = pad + legend_h;
  draw_panel(canvas, pad, top, panel_w, panel_h, lo, hi, collect(qual), colors);
  draw_panel(canvas, pad, top + panel_h + pad, panel_w, panel_h, lo, hi, collect(quan), colors);

  auto text = png_text(t, "pseudo-label quality (top) and quantity (bottom)");
  text.emplace_back("Legend", legend);
  save(png, canvas, text);
}

void plot_csv(const std::filesystem::path& csv, const std::filesystem::path& png, int class_index) {
  const auto t = read_csv(csv);
  if (t.has_column("kind") && t.has_column("latitude")) {
    plot_probe_heatmap(csv, png, class_index);
  } else if (t.has_column("series") && t.has_column("quality") && t.has_column("quantity")) {
    plot_quality_curves(csv, png);
  } else {
    throw Error(csv.string() + ": unrecognized CSV layout (expected a probe or a quality/quantity table)");
  }
}

}  // namespace stssl::cli
