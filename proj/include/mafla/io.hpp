#pragma once

#include <string>
#include <vector>

namespace mafla::io {

/// Shortest round-trip text for a double (%.17g); "nan"/"inf" spelled out.
std::string fmt(double v);

enum class ColumnType { integer, real, text };

struct Column {
  std::string name;
  ColumnType type;
  std::string description;
};

/// Table written as CSV plus a "<file>.schema.json" sidecar declaring the columns.
class CsvTable {
 public:
  explicit CsvTable(std::vector<Column> columns);

  /// Cells are pre-formatted; the count must match the column count.
  void add_row(std::vector<std::string> cells);
  std::size_t rows() const { return rows_.size(); }
  const std::vector<Column>& columns() const { return columns_; }
  const std::vector<std::vector<std::string>>& data() const { return rows_; }

  void write(const std::string& path) const;

 private:
  std::vector<Column> columns_;
  std::vector<std::vector<std::string>> rows_;
};

void ensure_dir(const std::string& path);

}  // namespace mafla::io
