#include "irbridge/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "irbridge/numerics.hpp"

namespace irbridge {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string to_hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvWriter::add_row(const std::vector<double>& values) {
  if (values.size() != header_.size())
    throw std::invalid_argument("CsvWriter: row width does not match header");
  std::string line;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k) line += ',';
    line += format_g17(values[k]);
  }
  rows_.push_back(std::move(line));
}

void CsvWriter::add_row_mixed(const std::vector<std::string>& cells) {
  if (cells.size() != header_.size())
    throw std::invalid_argument("CsvWriter: row width does not match header");
  std::string line;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (k) line += ',';
    line += cells[k];
  }
  rows_.push_back(std::move(line));
}

std::string CsvWriter::str() const {
  std::string out;
  for (std::size_t k = 0; k < header_.size(); ++k) {
    if (k) out += ',';
    out += header_[k];
  }
  out += '\n';
  for (const auto& r : rows_) {
    out += r;
    out += '\n';
  }
  return out;
}

void CsvWriter::write_file(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << str();
}

CsvTable read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open: " + path);
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    if (first) {
      while (std::getline(ss, cell, ',')) table.header.push_back(cell);
      first = false;
      continue;
    }
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != table.header.size())
      throw std::runtime_error("ragged CSV row in " + path);
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace irbridge
