#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace tcindiff {

// 17 significant digits, '.' decimal point, locale independent.
std::string format_double(double v);

std::uint64_t fnv1a(std::string_view bytes);

// Minimal CSV table: comment lines, one header row, data rows.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns);

  void comment(std::string line);
  void comment_front(std::string line);
  // Cells must match the header width; cells with commas or quotes are quoted.
  void row(const std::vector<std::string>& cells);
  void row_numbers(const std::vector<double>& values);

  std::size_t rows() const { return rows_.size(); }
  void write(std::ostream& os) const;
  std::string str() const;
  void save(const std::string& path) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::string> comments_;
  std::vector<std::string> rows_;
};

}  // namespace tcindiff
