#include "mafla/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace mafla::io {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvTable::CsvTable(std::vector<Column> columns) : columns_(std::move(columns)) {
  if (columns_.empty()) throw std::invalid_argument("CsvTable: no columns");
}

void CsvTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != columns_.size()) throw std::invalid_argument("CsvTable: row width does not match columns");
  rows_.push_back(std::move(cells));
}

void CsvTable::write(const std::string& path) const {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    for (std::size_t c = 0; c < columns_.size(); ++c) os << (c ? "," : "") << columns_[c].name;
    os << '\n';
    for (const auto& r : rows_) {
      for (std::size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << r[c];
      os << '\n';
    }
  }
  nlohmann::ordered_json schema;
  schema["file"] = std::filesystem::path(path).filename().string();
  schema["format"] = "csv";
  schema["header"] = true;
  auto& cols = schema["columns"] = nlohmann::ordered_json::array();
  for (const auto& c : columns_) {
    const char* t = c.type == ColumnType::integer ? "integer" : (c.type == ColumnType::real ? "real" : "text");
    cols.push_back({{"name", c.name}, {"type", t}, {"description", c.description}});
  }
  std::ofstream js(path + ".schema.json", std::ios::binary);
  if (!js) throw std::runtime_error("cannot write " + path + ".schema.json");
  js << schema.dump(2) << '\n';
}

void ensure_dir(const std::string& path) { std::filesystem::create_directories(path); }

}  // namespace mafla::io
