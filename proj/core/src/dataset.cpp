#include "nt/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "nt/config.hpp"
#include "nt/csv.hpp"

namespace nt {

void Dataset::rebuild_class_labels() {
  std::set<std::string> labels;
  for (const auto& rec : recordings)
    for (const auto& ev : rec.events) labels.insert(ev.label);
  class_labels.clear();
  class_labels.push_back("background");
  for (const auto& l : labels) class_labels.push_back(l);
}

double Dataset::sample_rate_hz() const {
  if (recordings.empty()) throw std::invalid_argument("empty dataset");
  double rate = recordings.front().stream.sample_rate_hz;
  for (const auto& r : recordings)
    if (r.stream.sample_rate_hz != rate)
      throw std::invalid_argument("recordings have mixed sample rates");
  return rate;
}

namespace {

int32_t clamp_code(double v) {
  double r = std::round(v);
  if (r > 511) return 511;
  if (r < -512) return -512;
  return int32_t(r);
}

void check_rate(double rate, std::optional<double> expected) {
  if (rate <= 0) throw std::runtime_error("sample rate must be positive");
  if (expected && std::abs(rate - *expected) > 1e-9)
    throw std::runtime_error("sample rate mismatch: file has " + format_double(rate) +
                             " Hz, expected " + format_double(*expected) + " Hz");
}

}  // namespace

SampleStream ingest_csv_stream(const std::string& path, double adc_lsb,
                               std::vector<std::string>* labels_out,
                               std::optional<double> expected_rate_hz, double rate_hz) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("malformed header: empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> labels;
  {
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) labels.push_back(f);
  }
  if (labels.empty()) throw std::runtime_error("malformed header: no channel labels in " + path);
  std::set<std::string> uniq(labels.begin(), labels.end());
  if (uniq.size() != labels.size())
    throw std::runtime_error("malformed header: duplicate channel labels in " + path);
  // header must not be numeric data
  for (const auto& l : labels) {
    if (l.empty()) throw std::runtime_error("malformed header: empty channel label in " + path);
  }

  check_rate(rate_hz, expected_rate_hz);
  SampleStream s;
  s.sample_rate_hz = rate_hz;
  s.fmt = qfmt::adc_sample;
  for (size_t c = 0; c < labels.size(); ++c) s.channel_ids.push_back(uint32_t(c));
  s.samples.assign(labels.size(), {});

  size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f;
    size_t c = 0;
    while (std::getline(ss, f, ',')) {
      if (c >= labels.size())
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": too many columns");
      s.samples[c].push_back(clamp_code(std::stod(f) / adc_lsb));
      ++c;
    }
    if (c != labels.size())
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": too few columns");
  }
  s.validate();
  if (labels_out) *labels_out = std::move(labels);
  return s;
}

SampleStream ingest_raw16_stream(const std::string& base_path,
                                 std::vector<std::string>* labels_out,
                                 std::optional<double> expected_rate_hz) {
  Config hdr = Config::parse_file(base_path + ".hdr");
  double rate = hdr.get_double("rate", 0);
  std::string channels = hdr.get_str("channels", "");
  if (channels.empty())
    throw std::runtime_error("malformed header: missing channels in " + base_path + ".hdr");
  check_rate(rate, expected_rate_hz);

  std::vector<std::string> labels;
  {
    std::stringstream ss(channels);
    std::string f;
    while (std::getline(ss, f, ',')) labels.push_back(f);
  }

  std::ifstream is(base_path + ".raw16", std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + base_path + ".raw16");
  std::vector<char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  const size_t frame = 2 * labels.size();
  if (bytes.size() % frame != 0)
    throw std::runtime_error("raw16 data size is not a whole number of frames");
  size_t n = bytes.size() / frame;

  SampleStream s;
  s.sample_rate_hz = rate;
  s.fmt = qfmt::adc_sample;
  for (size_t c = 0; c < labels.size(); ++c) s.channel_ids.push_back(uint32_t(c));
  s.samples.assign(labels.size(), std::vector<int32_t>(n));
  for (size_t t = 0; t < n; ++t) {
    for (size_t c = 0; c < labels.size(); ++c) {
      size_t off = (t * labels.size() + c) * 2;
      int16_t v = int16_t(uint16_t(uint8_t(bytes[off])) | (uint16_t(uint8_t(bytes[off + 1])) << 8));
      s.samples[c][t] = clamp_code(double(v));
    }
  }
  s.validate();
  if (labels_out) *labels_out = std::move(labels);
  return s;
}

void export_raw16(const SampleStream& stream, const std::vector<std::string>& labels,
                  const std::string& base_path) {
  stream.validate();
  if (labels.size() != stream.samples.size())
    throw std::invalid_argument("label count does not match channel count");
  {
    std::ofstream hdr(base_path + ".hdr");
    if (!hdr) throw std::runtime_error("cannot open for writing: " + base_path + ".hdr");
    hdr << "rate = " << format_double(stream.sample_rate_hz) << "\n";
    hdr << "channels = ";
    for (size_t c = 0; c < labels.size(); ++c) hdr << (c ? "," : "") << labels[c];
    hdr << "\n";
  }
  std::ofstream os(base_path + ".raw16", std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + base_path + ".raw16");
  size_t n = stream.length();
  for (size_t t = 0; t < n; ++t) {
    for (size_t c = 0; c < stream.samples.size(); ++c) {
      int16_t v = int16_t(stream.samples[c][t]);
      char b[2] = {char(uint8_t(uint16_t(v) & 0xFF)), char(uint8_t(uint16_t(v) >> 8))};
      os.write(b, 2);
    }
  }
}

std::vector<EventAnnotation> ingest_annotations(const std::string& path, double duration_s) {
  CsvTable t = read_csv(path, false);
  std::vector<EventAnnotation> events;
  for (size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (row.size() != 3)
      throw std::runtime_error(path + ": annotation row " + std::to_string(r + 1) +
                               " needs start_s,end_s,label");
    // tolerate a header row
    if (r == 0) {
      try {
        (void)std::stod(row[0]);
      } catch (...) {
        continue;
      }
    }
    EventAnnotation ev;
    ev.start_s = std::stod(row[0]);
    ev.end_s = std::stod(row[1]);
    ev.label = row[2];
    if (ev.label.empty())
      throw std::runtime_error(path + ": empty label in annotation row " + std::to_string(r + 1));
    if (ev.start_s < 0 || ev.end_s > duration_s + 1e-9 || ev.start_s >= ev.end_s)
      throw std::runtime_error(path + ": annotation [" + format_double(ev.start_s) + ", " +
                               format_double(ev.end_s) + ") out of bounds (duration " +
                               format_double(duration_s) + " s)");
    events.push_back(std::move(ev));
  }
  std::sort(events.begin(), events.end(),
            [](const EventAnnotation& a, const EventAnnotation& b) { return a.start_s < b.start_s; });
  return events;
}

Dataset ingest(const std::string& data_path, const std::string& format,
               const std::string& annotation_path, double adc_lsb,
               std::optional<double> expected_rate_hz, double csv_rate_hz) {
  Recording rec;
  rec.name = data_path;
  if (format == "csv") {
    rec.stream =
        ingest_csv_stream(data_path, adc_lsb, &rec.channel_labels, expected_rate_hz, csv_rate_hz);
  } else if (format == "raw16") {
    rec.stream = ingest_raw16_stream(data_path, &rec.channel_labels, expected_rate_hz);
  } else {
    throw std::runtime_error("unknown format '" + format + "' (want csv or raw16)");
  }
  if (!annotation_path.empty()) {
    double duration = double(rec.stream.length()) / rec.stream.sample_rate_hz;
    rec.events = ingest_annotations(annotation_path, duration);
  }
  Dataset ds;
  ds.recordings.push_back(std::move(rec));
  ds.rebuild_class_labels();
  return ds;
}

}  // namespace nt
