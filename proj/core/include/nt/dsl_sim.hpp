#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nt/config.hpp"

namespace nt {

// Electrode-referred ranges of the behavioral front-end model. The offset
// DACs span +/-50 mV; the amplifier/ADC chain stays linear within
// +/-adc_range_v of residual input.
struct DslParams {
  double adc_range_v = 5e-3;    // linear input window after offset removal
  double dac_range_v = 50e-3;   // coarse/fine feedback DAC span
  int osr = 50;                 // delta-sigma oversampling ratio
  int shift_gain = 0;           // integrator input shift, sets the HP pole
};

// Per-channel servo state: 9-bit coarse code, 19-bit saturating integrator,
// first-order delta-sigma residue.
struct DslState {
  uint16_t coarse_code = 256;  // mid-scale
  int32_t integrator = 0;
  int64_t dsm_residue = 0;
  int shift_gain = 0;
};

struct CoarseResult {
  uint16_t code = 0;
  double residual_v = 0;
};

// 9-iteration SAR binary search against the 9-bit offset DAC. The reported
// residual is offset minus the mid-tread DAC output; |residual| <= 1 LSB
// (~0.195 mV) over the full +/-50 mV range.
CoarseResult coarse_search(double offset_v, const DslParams& p = {});

double coarse_dac_volts(uint16_t code, const DslParams& p = {});

// One fine-loop sample: subtract the delta-sigma-modulated feedback (coarse
// code + integrator), clip to the amplifier window, digitize, accumulate.
// Returns the corrected (clipped) electrode-referred sample.
double fine_loop_step(double input_v, DslState& state, const DslParams& p = {});

// Raw first-order error-feedback modulator step: word (19-bit signed) in,
// 9-bit DAC code out. Exposed for the duty-cycle property tests.
int32_t dsm_step(int32_t word19, int64_t& residue);

struct EdoScenario {
  int n_windows = 3;
  double window_len_s = 1.0;
  double sample_rate_hz = 2000.0;
  int n_channels = 4;
  double offset_min_mv = 0.0;
  double offset_max_mv = 50.0;
  bool reshuffle_each_window = true;  // new random offsets every window
  uint64_t seed = 1;
  enum class Mode { TwoStep, FineOnly, Disabled } mode = Mode::TwoStep;
  int shift_gain = 0;
  struct Tone {
    double freq_hz = 100.0;
    double amp_mv = 1.0;
  };
  std::vector<Tone> tones = {{100.0, 1.0}};
  double noise_mv = 0.05;

  static EdoScenario from_config(const Config& cfg);
};

struct ScenarioRow {
  int window = 0;
  uint32_t channel = 0;
  double unsaturated_fraction = 0;
  double correlation = 0;
};

struct ScenarioReport {
  std::vector<ScenarioRow> rows;
  double min_unsaturated_fraction = 0;
  double min_correlation = 0;
};

// Multi-window capture simulation: per window, coarse search runs in the
// first per-channel sampling slot (two-step mode), then the fine loop covers
// the rest. Reports the unsaturated fraction and the correlation of the
// recovered signal against the clean injected signal.
ScenarioReport run_scenario(const EdoScenario& s);

void write_csv(const ScenarioReport& rep, const std::string& path, uint64_t seed);

}  // namespace nt
