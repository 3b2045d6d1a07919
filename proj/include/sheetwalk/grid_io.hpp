#ifndef SHEETWALK_GRID_IO_HPP
#define SHEETWALK_GRID_IO_HPP

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "sheetwalk/sheet.hpp"

namespace sheetwalk {

using Json = nlohmann::ordered_json;

enum class GridFormat { csv, json };

/// ".json" selects JSON, anything else CSV.
GridFormat format_from_path(const std::filesystem::path& path);

/// A table of field values on a tensor grid.
///
/// CSV layout: header `axis1,...,axisd,value`, one row per grid point in
/// row-major order (last axis fastest). JSON layout:
/// `{params, grid: {axis1: [...], ...}, values: nested arrays}`.
struct GridTable {
  std::vector<std::vector<double>> axes;
  Eigen::ArrayXd values; // row-major
  Json params = Json::object();
};

/// Shortest decimal that parses back to the same double.
std::string format_double(double value);

/// Serializes a table. `extra` members are appended to the JSON document
/// (ignored for CSV).
std::string render_grid(const GridTable& table, GridFormat format,
                        const Json& extra = Json::object());

GridTable parse_grid(const std::string& text, GridFormat format);

/// Throws IoError naming the path.
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

GridTable read_grid(const std::filesystem::path& path);

/// Sheet values on the grid with params {n, lambda, d, seed}.
GridTable sheet_table(const SheetApproximation& sheet, const GridSpec& grid);

void export_grid(const SheetApproximation& sheet, const GridSpec& grid, GridFormat format,
                 const std::filesystem::path& path);

} // namespace sheetwalk

#endif
