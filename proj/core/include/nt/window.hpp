#pragma once

#include <cstdint>
#include <vector>

#include "nt/fixed_point.hpp"

namespace nt {

inline constexpr size_t kMaxChannels = 64;
inline constexpr double kMinWindowLenS = 0.25;
inline constexpr double kMaxWindowLenS = 2.0;

// A multichannel sample stream: raw fixed-point samples per channel plus
// sampling metadata. Channel ids are unique and ordered.
struct SampleStream {
  std::vector<uint32_t> channel_ids;
  std::vector<std::vector<int32_t>> samples;  // [channel][t]
  QFormat fmt = qfmt::adc_sample;
  double sample_rate_hz = 0;

  size_t length() const { return samples.empty() ? 0 : samples.front().size(); }
  void validate() const;
};

// One feature-extraction window. Immutable after construction; all channels
// share one Q-format and have identical length.
struct SignalWindow {
  std::vector<uint32_t> channel_ids;
  std::vector<std::vector<int32_t>> samples;  // [channel][t]
  QFormat fmt = qfmt::adc_sample;
  double sample_rate_hz = 0;

  size_t length() const { return samples.empty() ? 0 : samples.front().size(); }
  double window_len_s() const { return double(length()) / sample_rate_hz; }
  size_t num_channels() const { return channel_ids.size(); }

  // Index of a channel id; throws if absent.
  size_t channel_index(uint32_t id) const;
  FixedPoint at(size_t channel_idx, size_t t) const {
    return {samples[channel_idx][t], fmt};
  }

  void validate() const;
};

// Split a stream into consecutive non-overlapping windows of the given
// length; a trailing partial window is dropped. window_len_s must lie in
// [0.25, 2.0] and the stream must cover at least one window.
std::vector<SignalWindow> make_windows(const SampleStream& stream, double window_len_s);

}  // namespace nt
