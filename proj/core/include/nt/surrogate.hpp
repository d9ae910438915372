#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "nt/window.hpp"

namespace nt {

struct EventAnnotation {
  double start_s = 0;
  double end_s = 0;
  std::string label;
};

namespace surrogate {

// Approximately 1/f noise (Voss-McCartney), unit RMS.
std::vector<double> pink_noise(size_t n, std::mt19937_64& rng);

// Three-channel window for approximation validation at 2 kHz:
//   ch0: pink background + theta oscillation + HFO pair + phase-modulated
//        ripple carrier (drives LL/ACT/MOB/COM/SE/HFO_RATIO/PAC)
//   ch1: theta oscillation phase-coupled to ch0 (drives PLV)
//   ch2: pink background + slow DC drift (drives LMP)
// Per-window parameters (scale, band mix, coupling, drift) are drawn from
// the seeded generator so features vary across windows.
SignalWindow validation_window(uint64_t seed, size_t index, double sample_rate_hz = 2000.0,
                               size_t n_samples = 2000);

struct CorpusSpec {
  uint64_t seed = 1;
  size_t n_channels = 8;
  double sample_rate_hz = 512.0;
  double duration_s = 600.0;
  size_t n_events = 10;
  double event_min_s = 6.0;
  double event_max_s = 10.0;
  double background_rms = 30.0;   // ADC codes
  double burst_amplitude = 120.0; // ADC codes
  double burst_freq_hz = 21.0;
  size_t affected_channels = 4;
};

struct Corpus {
  SampleStream stream;
  std::vector<EventAnnotation> events;
};

// Pink-noise background with strongly separable oscillatory bursts during
// annotated events. Ground truth is exact by construction.
Corpus seizure_corpus(const CorpusSpec& spec);

// K separable Gaussian blobs in D dimensions (for classifier tests).
struct Blobs {
  std::vector<std::vector<double>> X;
  std::vector<int> y;
  int num_classes = 2;
};
Blobs make_blobs(size_t n_per_class, size_t dims, int k, double separation, uint64_t seed);

}  // namespace surrogate
}  // namespace nt
