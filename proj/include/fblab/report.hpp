#pragma once

#include <string>
#include <variant>
#include <vector>

namespace fblab {

using CsvCell = std::variant<double, long long, std::string>;

/// Comma-separated table with a header row. Doubles print with 12
/// significant digits. A non-finite double is written as 0 and flagged in
/// the `status` column when the table has one.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  void add_row(std::vector<CsvCell> row);
  std::size_t rows() const { return rows_.size(); }
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<CsvCell>> rows_;
  int status_column_ = -1;
};

std::string format_number(double v);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// A log-log line chart as a standalone SVG document. Points with a
/// nonpositive coordinate are dropped; an empty chart still gets axes.
std::string loglog_svg(const std::string& title, const std::string& xlabel,
                       const std::string& ylabel, const std::vector<Series>& series);

}  // namespace fblab
