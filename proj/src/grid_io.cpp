#include "sheetwalk/grid_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sheetwalk/errors.hpp"

namespace sheetwalk {

namespace {

std::size_t table_size(const std::vector<std::vector<double>>& axes) {
  std::size_t total = 1;
  for (const auto& a : axes)
    total *= a.size();
  return total;
}

Json nested_values(const GridTable& table, std::size_t axis, std::size_t offset,
                   std::size_t stride) {
  Json out = Json::array();
  const std::size_t count = table.axes[axis].size();
  const std::size_t inner = stride / count;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t start = offset + i * inner;
    if (axis + 1 == table.axes.size())
      out.push_back(table.values[static_cast<Eigen::Index>(start)]);
    else
      out.push_back(nested_values(table, axis + 1, start, inner));
  }
  return out;
}

void flatten(const Json& node, std::vector<double>& out) {
  if (node.is_array()) {
    for (const auto& child : node)
      flatten(child, out);
  } else {
    out.push_back(node.get<double>());
  }
}

double parse_double(const std::string& field) {
  double value = 0.0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw std::invalid_argument("grid: cannot parse number '" + field + "'");
  return value;
}

GridTable parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  // Leading '#' lines carry provenance.
  bool found = false;
  while (!found && std::getline(in, line))
    found = line.empty() || line.front() != '#';
  if (!found)
    throw std::invalid_argument("grid: empty CSV");
  std::size_t columns = 1;
  for (char c : line)
    columns += c == ',' ? 1 : 0;
  if (columns < 2 || line.substr(line.rfind(',') + 1) != "value")
    throw std::invalid_argument("grid: CSV header must end with 'value'");
  const std::size_t d = columns - 1;

  GridTable table;
  table.axes.resize(d);
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    std::istringstream row(line);
    std::string field;
    std::size_t c = 0;
    while (std::getline(row, field, ',')) {
      const double v = parse_double(field);
      if (c < d) {
        auto& axis = table.axes[c];
        if (std::find(axis.begin(), axis.end(), v) == axis.end())
          axis.push_back(v);
      } else {
        values.push_back(v);
      }
      ++c;
    }
    if (c != columns)
      throw std::invalid_argument("grid: CSV row has the wrong number of fields");
  }
  table.values = Eigen::Map<Eigen::ArrayXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  if (table_size(table.axes) != values.size())
    throw std::invalid_argument("grid: CSV rows do not form a tensor grid");
  return table;
}

GridTable parse_json(const std::string& text) {
  const Json doc = Json::parse(text);
  GridTable table;
  table.params = doc.at("params");
  const auto& grid = doc.at("grid");
  for (std::size_t i = 1; grid.contains("axis" + std::to_string(i)); ++i)
    table.axes.push_back(grid.at("axis" + std::to_string(i)).get<std::vector<double>>());
  std::vector<double> values;
  flatten(doc.at("values"), values);
  if (table_size(table.axes) != values.size())
    throw std::invalid_argument("grid: JSON values do not match the axes");
  table.values = Eigen::Map<Eigen::ArrayXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  return table;
}

} // namespace

GridFormat format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".json" ? GridFormat::json : GridFormat::csv;
}

std::string format_double(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  if (ec != std::errc())
    throw std::runtime_error("format_double: conversion failed");
  return std::string(buffer, ptr);
}

std::string render_grid(const GridTable& table, GridFormat format, const Json& extra) {
  if (table.axes.empty() || table_size(table.axes) != static_cast<std::size_t>(table.values.size()))
    throw std::invalid_argument("render_grid: values do not match the axes");
  const std::size_t d = table.axes.size();

  if (format == GridFormat::json) {
    Json doc = Json::object();
    doc["params"] = table.params;
    Json grid = Json::object();
    for (std::size_t i = 0; i < d; ++i)
      grid["axis" + std::to_string(i + 1)] = table.axes[i];
    doc["grid"] = grid;
    doc["values"] = nested_values(table, 0, 0, table_size(table.axes));
    for (const auto& [key, value] : extra.items())
      doc[key] = value;
    return doc.dump(1) + "\n";
  }

  std::string out;
  for (std::size_t i = 0; i < d; ++i)
    out += "axis" + std::to_string(i + 1) + ",";
  out += "value\n";
  std::vector<std::size_t> idx(d, 0);
  for (Eigen::Index flat = 0; flat < table.values.size(); ++flat) {
    for (std::size_t i = 0; i < d; ++i)
      out += format_double(table.axes[i][idx[i]]) + ",";
    out += format_double(table.values[flat]) + "\n";
    for (std::size_t i = d; i > 0; --i) {
      if (++idx[i - 1] < table.axes[i - 1].size())
        break;
      idx[i - 1] = 0;
    }
  }
  return out;
}

GridTable parse_grid(const std::string& text, GridFormat format) {
  return format == GridFormat::json ? parse_json(text) : parse_csv(text);
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot open '" + path.string() + "' for writing");
  out << content;
  out.flush();
  if (!out)
    throw IoError("write to '" + path.string() + "' failed");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

GridTable read_grid(const std::filesystem::path& path) {
  return parse_grid(read_text_file(path), format_from_path(path));
}

GridTable sheet_table(const SheetApproximation& sheet, const GridSpec& grid) {
  GridTable table;
  table.axes = grid.axes;
  table.values = evaluate_grid(sheet, grid);
  table.params = {{"n", sheet.params().n},
                  {"lambda", sheet.params().lambda},
                  {"d", sheet.params().d},
                  {"seed", sheet.seed()}};
  return table;
}

void export_grid(const SheetApproximation& sheet, const GridSpec& grid, GridFormat format,
                 const std::filesystem::path& path) {
  write_text_file(path, render_grid(sheet_table(sheet, grid), format));
}

} // namespace sheetwalk
