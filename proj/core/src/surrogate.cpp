#include "nt/surrogate.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numbers>

namespace nt::surrogate {

namespace {
constexpr double kPi = std::numbers::pi;

int32_t to_code(double v) {
  double r = std::round(v);
  if (r > 511) return 511;
  if (r < -512) return -512;
  return int32_t(r);
}
}  // namespace

std::vector<double> pink_noise(size_t n, std::mt19937_64& rng) {
  // Voss-McCartney: sum of octave-clocked white rows plus a white row.
  constexpr int rows = 10;
  std::normal_distribution<double> dist(0.0, 1.0);
  std::array<double, rows> row{};
  for (auto& r : row) r = dist(rng);
  std::vector<double> out(n);
  double running = 0;
  for (auto& r : row) running += r;
  for (size_t t = 0; t < n; ++t) {
    size_t idx = t == 0 ? 0 : size_t(std::countr_zero(t));
    if (idx >= rows) idx = rows - 1;
    running -= row[idx];
    row[idx] = dist(rng);
    running += row[idx];
    out[t] = (running + dist(rng)) / std::sqrt(double(rows) + 1.0);
  }
  return out;
}

SignalWindow validation_window(uint64_t seed, size_t index, double rate, size_t n) {
  std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ULL * (index + 1)));
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // per-window parameters
  const double scale = 0.7 + 0.6 * uni(rng);                // overall amplitude
  const double theta_amp = 40.0 * std::exp(0.35 * gauss(rng));
  const double hf_mix = std::exp(0.5 * gauss(rng));         // spectral tilt driver
  const double hfo1_amp = 12.0 * hf_mix * std::exp(0.3 * gauss(rng));
  const double hfo2_amp = 12.0 * hf_mix * std::exp(0.5 * gauss(rng));
  const double ripple_amp = 18.0 * std::exp(0.3 * gauss(rng));
  const double pac_depth = uni(rng);                        // modulation index
  const double plv_coupling = 0.15 + 0.85 * uni(rng);
  const double plv_lag = (2.0 * uni(rng) - 1.0) * kPi;
  const double dc_drift = (2.0 * uni(rng) - 1.0) * 30.0;
  const double theta_freq = 5.0 + 2.0 * uni(rng);
  const double act_amp = 35.0 * (0.7 + 0.6 * uni(rng));     // shape-stable channel
  const double noise_amp = 25.0;

  auto p0 = pink_noise(n, rng);
  auto p1 = pink_noise(n, rng);
  auto p2 = pink_noise(n, rng);

  const double phi1 = 2.0 * kPi * uni(rng);
  const double phi2 = 2.0 * kPi * uni(rng);
  const double walk_sigma = (1.0 - plv_coupling) * 0.35;

  SignalWindow w;
  w.channel_ids = {0, 1, 2, 3};
  w.fmt = qfmt::adc_sample;
  w.sample_rate_hz = rate;
  w.samples.assign(4, std::vector<int32_t>(n));

  double theta = 2.0 * kPi * uni(rng);
  double walk = 0;
  for (size_t t = 0; t < n; ++t) {
    double ts = double(t) / rate;
    theta += 2.0 * kPi * theta_freq / rate + 0.01 * gauss(rng);
    walk += walk_sigma * gauss(rng) / std::sqrt(rate / 100.0);
    double carrier_env = 0.5 * (1.0 + pac_depth * std::cos(theta));
    double ch0 = noise_amp * p0[t] + theta_amp * std::cos(theta) +
                 hfo1_amp * std::cos(2.0 * kPi * 250.0 * ts + phi1) +
                 hfo2_amp * std::cos(2.0 * kPi * 350.0 * ts + phi2) +
                 ripple_amp * carrier_env * std::cos(2.0 * kPi * 115.0 * ts + phi2 * 0.5);
    double ch1 = noise_amp * p1[t] + theta_amp * std::cos(theta + plv_lag + walk);
    double ch2 = noise_amp * 0.5 * p2[t] + dc_drift;
    double ch3 = act_amp * gauss(rng);  // broadband, stable crest factor
    w.samples[0][t] = to_code(scale * ch0);
    w.samples[1][t] = to_code(scale * ch1);
    w.samples[2][t] = to_code(ch2);
    w.samples[3][t] = to_code(ch3);
  }
  return w;
}

Corpus seizure_corpus(const CorpusSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const size_t n = size_t(spec.duration_s * spec.sample_rate_hz);
  Corpus corpus;
  corpus.stream.fmt = qfmt::adc_sample;
  corpus.stream.sample_rate_hz = spec.sample_rate_hz;
  for (size_t c = 0; c < spec.n_channels; ++c) corpus.stream.channel_ids.push_back(uint32_t(c));
  corpus.stream.samples.assign(spec.n_channels, std::vector<int32_t>(n, 0));

  // event intervals: evenly partition the timeline, jitter inside each slot
  const double slot = spec.duration_s / double(spec.n_events);
  for (size_t e = 0; e < spec.n_events; ++e) {
    double len = spec.event_min_s + (spec.event_max_s - spec.event_min_s) * uni(rng);
    double lo = double(e) * slot + 0.15 * slot;
    double hi = double(e + 1) * slot - 0.15 * slot - len;
    double start = lo + (hi > lo ? (hi - lo) * uni(rng) : 0.0);
    corpus.events.push_back({start, start + len, "seizure"});
  }

  std::vector<double> burst_phase(spec.n_channels, 0.0);
  for (size_t c = 0; c < spec.n_channels; ++c) burst_phase[c] = 2.0 * kPi * uni(rng);

  for (size_t c = 0; c < spec.n_channels; ++c) {
    auto pink = pink_noise(n, rng);
    const bool affected = c < spec.affected_channels;
    for (size_t t = 0; t < n; ++t) {
      double ts = double(t) / spec.sample_rate_hz;
      double v = spec.background_rms * pink[t];
      if (affected) {
        for (const auto& ev : corpus.events) {
          if (ts >= ev.start_s && ts < ev.end_s) {
            // 0.5 s cosine ramp at both edges
            double ramp_in = std::min(1.0, (ts - ev.start_s) / 0.5);
            double ramp_out = std::min(1.0, (ev.end_s - ts) / 0.5);
            double ramp = std::min(ramp_in, ramp_out);
            v += ramp * spec.burst_amplitude *
                 std::sin(2.0 * kPi * spec.burst_freq_hz * ts + burst_phase[c]);
            v += ramp * 0.5 * spec.burst_amplitude * pink[(t * 7 + 13) % n];
            break;
          }
        }
      }
      corpus.stream.samples[c][t] = to_code(v);
    }
  }
  return corpus;
}

Blobs make_blobs(size_t n_per_class, size_t dims, int k, double separation, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Blobs b;
  b.num_classes = k;
  std::vector<std::vector<double>> centers(size_t(k), std::vector<double>(dims, 0.0));
  for (auto& c : centers)
    for (auto& v : c) v = separation * gauss(rng);
  for (int cls = 0; cls < k; ++cls) {
    for (size_t i = 0; i < n_per_class; ++i) {
      std::vector<double> x(dims);
      for (size_t d = 0; d < dims; ++d) x[d] = centers[size_t(cls)][d] + gauss(rng);
      b.X.push_back(std::move(x));
      b.y.push_back(cls);
    }
  }
  return b;
}

}  // namespace nt::surrogate
