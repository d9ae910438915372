#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace nt {

// Programmable biphasic pulse parameters (one of 16 channels).
struct StimCommand {
  double amplitude_ua = 100;     // 65 .. 600
  double pulse_width_us = 100;   // 9.375 .. 203.125
  double frequency_hz = 100;     // 9.6 .. 65000
  int channel = 0;               // 0 .. 15
};

// Empty on success; one message per violated bound otherwise.
std::vector<std::string> validate(const StimCommand& cmd);

struct StimParams {
  double v_safe_v = 0.05;          // residual-voltage safety band
  double cb_current_frac = 0.10;   // active CB current, fraction of amplitude
  double cb_target_frac = 0.5;     // regulate |v| down to this fraction of v_safe
  double step_s = 0.5e-6;
  bool active_cb = true;
  bool passive_discharge = true;
};

struct CbEvent {
  int pulse = 0;
  double t_start_s = 0;
  double duration_s = 0;
  double charge_c = 0;
};

struct PulseStats {
  double q_cathodic_c = 0;   // charge in the cathodic phase (negative)
  double q_anodic_c = 0;     // charge in the anodic phase
  double residual_q_c = 0;   // electrode charge at the end of the period
  double balance_error = 0;  // |residual| / |q_cathodic|
};

// Simulated electrode current/voltage/charge trajectory on a series RC load.
struct StimTrace {
  double step_s = 0.5e-6;
  std::vector<double> t, i, v, q;
  std::vector<uint8_t> cb_flag;
  std::vector<CbEvent> cb_events;
  std::vector<PulseStats> pulses;
  double end_voltage_v = 0;
  double delivered_charge_c = 0;  // total |charge| pushed through the electrode
};

// Cathodic-then-anodic rectangular phases; the anodic current carries the
// injected gain mismatch. After each biphasic pulse the open-circuit residual
// voltage is compared with +/-v_safe: active CB injects a correction current
// until the voltage is back inside the band, then the passive discharge
// switch bleeds the electrode to ground for the rest of the period.
StimTrace simulate_pulse_train(const StimCommand& cmd, double r_ohm, double c_farad,
                               int n_pulses, double mismatch_ppm, const StimParams& p = {});

void write_trace_csv(const StimTrace& trace, const std::string& path, uint64_t seed);

}  // namespace nt
