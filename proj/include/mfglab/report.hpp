#ifndef MFGLAB_REPORT_HPP
#define MFGLAB_REPORT_HPP

#include <string>
#include <vector>

namespace mfglab {

/// 17-significant-digit float formatting shared by every emitted table.
std::string fmt_g17(double v);

/// Deterministic CSV assembly: fixed column order, '\n' line endings.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns);
  void begin_row();
  void add(double v);
  void add(int v);
  void add(const std::string& v);
  std::string str() const;

 private:
  std::size_t columns_;
  std::size_t in_row_ = 0;
  std::string out_;
};

void write_file(const std::string& path, const std::string& content);

}  // namespace mfglab

#endif  // MFGLAB_REPORT_HPP
