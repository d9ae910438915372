#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nt/surrogate.hpp"
#include "nt/window.hpp"

namespace nt {

struct Recording {
  std::string name;
  std::vector<std::string> channel_labels;
  SampleStream stream;
  std::vector<EventAnnotation> events;
};

struct Dataset {
  std::vector<Recording> recordings;
  std::vector<std::string> class_labels;  // [0] is the background class

  void rebuild_class_labels();
  double sample_rate_hz() const;
};

// CSV layout: header row of channel labels, one row per sample. Values are
// scaled by 1/adc_lsb and rounded to 10-bit codes.
SampleStream ingest_csv_stream(const std::string& path, double adc_lsb,
                               std::vector<std::string>* labels_out,
                               std::optional<double> expected_rate_hz, double rate_hz);

// raw16 layout: little-endian int16, channel-interleaved, sample-major, with
// a sidecar text header `<base>.hdr` (rate = <hz>, channels = a,b,c).
SampleStream ingest_raw16_stream(const std::string& base_path,
                                 std::vector<std::string>* labels_out,
                                 std::optional<double> expected_rate_hz);
void export_raw16(const SampleStream& stream, const std::vector<std::string>& labels,
                  const std::string& base_path);

// Annotation CSV: start_s,end_s,label rows (optional header). Annotations
// must lie inside [0, duration].
std::vector<EventAnnotation> ingest_annotations(const std::string& path, double duration_s);

// Assembles a one-recording dataset; format is "csv" or "raw16".
Dataset ingest(const std::string& data_path, const std::string& format,
               const std::string& annotation_path, double adc_lsb,
               std::optional<double> expected_rate_hz, double csv_rate_hz);

}  // namespace nt
