#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace asepkpz {

// Round-trip double formatting (17 significant digits).
std::string fmt17(double v);

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  CsvWriter& operator<<(double v);
  CsvWriter& operator<<(long long v);
  CsvWriter& operator<<(int v) { return *this << static_cast<long long>(v); }
  CsvWriter& operator<<(const std::string& s);
  void end_row();

 private:
  void sep();
  std::ofstream out_;
  bool first_ = true;
};

// Whitespace-separated numeric columns for plotting tools.
void write_columns(const std::string& path, const std::vector<std::string>& names,
                   const std::vector<std::vector<double>>& columns);

}  // namespace asepkpz
