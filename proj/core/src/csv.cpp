#include "nt/csv.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "nt/version.hpp"

namespace nt {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path) : os_(path) {
  if (!os_) throw std::runtime_error("cannot open for writing: " + path);
}

void CsvWriter::comment_line(uint64_t seed) {
  os_ << "# " << kToolName << " " << kVersion << " seed=" << seed << "\n";
}

void CsvWriter::comment(const std::string& text) { os_ << "# " << text << "\n"; }

void CsvWriter::header(const std::vector<std::string>& cols) { row(cols); }

void CsvWriter::sep() {
  if (row_started_) os_ << ',';
  row_started_ = true;
}

void CsvWriter::field(const std::string& v) {
  sep();
  os_ << v;
}
void CsvWriter::field(int64_t v) {
  sep();
  os_ << v;
}
void CsvWriter::field(uint64_t v) {
  sep();
  os_ << v;
}
void CsvWriter::field(double v) {
  sep();
  os_ << format_double(v);
}
void CsvWriter::end_row() {
  os_ << '\n';
  row_started_ = false;
}

void CsvWriter::row(const std::vector<std::string>& vals) {
  for (const auto& v : vals) field(v);
  end_row();
}

CsvTable read_csv(const std::string& path, bool has_header) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  CsvTable t;
  std::string line;
  bool header_done = !has_header;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (ss.eof() && !line.empty() && line.back() == ',') fields.push_back("");
    if (!header_done) {
      t.header = std::move(fields);
      header_done = true;
    } else {
      t.rows.push_back(std::move(fields));
    }
  }
  return t;
}

}  // namespace nt
