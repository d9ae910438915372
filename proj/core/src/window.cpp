#include "nt/window.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace nt {

static void validate_layout(const std::vector<uint32_t>& ids,
                            const std::vector<std::vector<int32_t>>& samples,
                            double rate) {
  if (ids.empty() || samples.empty()) throw std::invalid_argument("empty stream");
  if (ids.size() != samples.size())
    throw std::invalid_argument("channel id / sample row count mismatch");
  if (ids.size() > kMaxChannels) throw std::invalid_argument("more than 64 channels");
  if (rate <= 0) throw std::invalid_argument("sample rate must be positive");
  std::set<uint32_t> uniq(ids.begin(), ids.end());
  if (uniq.size() != ids.size()) throw std::invalid_argument("duplicate channel ids");
  size_t len = samples.front().size();
  for (const auto& ch : samples)
    if (ch.size() != len) throw std::invalid_argument("inconsistent channel lengths");
  if (len == 0) throw std::invalid_argument("empty stream");
}

void SampleStream::validate() const { validate_layout(channel_ids, samples, sample_rate_hz); }

void SignalWindow::validate() const { validate_layout(channel_ids, samples, sample_rate_hz); }

size_t SignalWindow::channel_index(uint32_t id) const {
  auto it = std::find(channel_ids.begin(), channel_ids.end(), id);
  if (it == channel_ids.end())
    throw std::invalid_argument("channel " + std::to_string(id) + " not in window");
  return size_t(it - channel_ids.begin());
}

std::vector<SignalWindow> make_windows(const SampleStream& stream, double window_len_s) {
  stream.validate();
  if (window_len_s < kMinWindowLenS || window_len_s > kMaxWindowLenS)
    throw std::invalid_argument("window length outside [0.25, 2.0] s");
  size_t n = size_t(std::llround(stream.sample_rate_hz * window_len_s));
  if (n == 0) throw std::invalid_argument("window shorter than one sample");
  size_t total = stream.length();
  if (total < n) throw std::invalid_argument("stream shorter than one window");

  size_t count = total / n;  // trailing partial window dropped
  std::vector<SignalWindow> out;
  out.reserve(count);
  for (size_t w = 0; w < count; ++w) {
    SignalWindow win;
    win.channel_ids = stream.channel_ids;
    win.fmt = stream.fmt;
    win.sample_rate_hz = stream.sample_rate_hz;
    win.samples.reserve(stream.samples.size());
    for (const auto& ch : stream.samples)
      win.samples.emplace_back(ch.begin() + w * n, ch.begin() + (w + 1) * n);
    out.push_back(std::move(win));
  }
  return out;
}

}  // namespace nt
