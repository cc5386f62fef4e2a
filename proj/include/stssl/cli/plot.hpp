// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace stssl::cli {

/// Comma-separated table. Lines starting with '#' are comments; a comment of
/// the form "# key: value" is kept in `comments`.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::pair<std::string, std::string>> comments;

  /// Column index; throws Error when absent.
  std::size_t column(const std::string& name) const;
  bool has_column(const std::string& name) const;
};

/// Throws Error on a missing file, a ragged row, or a table without rows.
CsvTable read_csv(const std::filesystem::path& path);

/// Heatmap of one class over the spatial points of a probe CSV. Each grid
/// cell becomes a cell_px square. Returns the grid dimensions (rows, cols).
std::pair<int, int> plot_probe_heatmap(const std::filesystem::path& csv, const std::filesystem::path& png,
                                       int class_index, int cell_px = 6);

/// Two stacked panels from a long-format curve CSV with columns
/// step,series,quality,quantity: quality on top, quantity below, one line per
/// series.
void plot_quality_curves(const std::filesystem::path& csv, const std::filesystem::path& png);

/// Dispatches on the CSV header.
void plot_csv(const std::filesystem::path& csv, const std::filesystem::path& png, int class_index);

}  // namespace stssl::cli
