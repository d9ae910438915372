#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace nt {

// Deterministic CSV writer. Every report starts with a comment line carrying
// the tool version and seed so repeated runs are byte-comparable.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);

  void comment_line(uint64_t seed);
  void comment(const std::string& text);
  void header(const std::vector<std::string>& cols);
  void field(const std::string& v);
  void field(int64_t v);
  void field(uint64_t v);
  void field(int v) { field(int64_t(v)); }
  void field(double v);
  void end_row();

  // convenience: whole row of doubles/strings
  void row(const std::vector<std::string>& vals);

 private:
  std::ofstream os_;
  bool row_started_ = false;
  void sep();
};

std::string format_double(double v);

// Minimal CSV reader: no quoting, '#' lines are comments.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv(const std::string& path, bool has_header);

}  // namespace nt
