#include "mfglab/report.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace mfglab {

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(columns.size()) {
  for (std::size_t k = 0; k < columns.size(); ++k) {
    if (k) out_ += ',';
    out_ += columns[k];
  }
  out_ += '\n';
  in_row_ = columns_;  // header complete
}

void CsvTable::begin_row() {
  if (in_row_ != columns_)
    throw std::logic_error("csv row started before the previous one was filled");
  in_row_ = 0;
}

void CsvTable::add(double v) { add(fmt_g17(v)); }
void CsvTable::add(int v) { add(std::to_string(v)); }

void CsvTable::add(const std::string& v) {
  if (in_row_) out_ += ',';
  out_ += v;
  ++in_row_;
  if (in_row_ == columns_) out_ += '\n';
}

std::string CsvTable::str() const {
  if (in_row_ != columns_) throw std::logic_error("csv ends mid-row");
  return out_;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write output file '" + path + "'");
  out << content;
  if (!out) throw std::runtime_error("failed writing output file '" + path + "'");
}

}  // namespace mfglab
