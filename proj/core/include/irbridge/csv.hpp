#pragma once

#include <string>
#include <vector>

namespace irbridge {

/// Minimal CSV writer: UTF-8, header row, %.17g numerics (spec'd file format).
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  void add_row(const std::vector<double>& values);
  void add_row_mixed(const std::vector<std::string>& cells);

  std::string str() const;
  void write_file(const std::string& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::string> rows_;
};

/// Parses a numeric CSV produced by CsvWriter (header + double cells).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
CsvTable read_csv(const std::string& path);

}  // namespace irbridge
