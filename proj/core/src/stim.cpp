#include "nt/stim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nt/csv.hpp"

namespace nt {

std::vector<std::string> validate(const StimCommand& cmd) {
  std::vector<std::string> errs;
  if (cmd.amplitude_ua < 65.0 || cmd.amplitude_ua > 600.0)
    errs.push_back("amplitude " + format_double(cmd.amplitude_ua) + " uA outside [65, 600]");
  if (cmd.pulse_width_us < 9.375 || cmd.pulse_width_us > 203.125)
    errs.push_back("pulse width " + format_double(cmd.pulse_width_us) +
                   " us outside [9.375, 203.125]");
  if (cmd.frequency_hz < 9.6 || cmd.frequency_hz > 65000.0)
    errs.push_back("frequency " + format_double(cmd.frequency_hz) + " Hz outside [9.6, 65000]");
  if (cmd.channel < 0 || cmd.channel > 15)
    errs.push_back("channel " + std::to_string(cmd.channel) + " outside [0, 15]");
  double period_us = 1e6 / cmd.frequency_hz;
  if (2.0 * cmd.pulse_width_us >= period_us)
    errs.push_back("duty cycle: 2 x pulse width (" + format_double(2.0 * cmd.pulse_width_us) +
                   " us) must be shorter than the period (" + format_double(period_us) + " us)");
  return errs;
}

namespace {

double overlap(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

}  // namespace

StimTrace simulate_pulse_train(const StimCommand& cmd, double r_ohm, double c_farad,
                               int n_pulses, double mismatch_ppm, const StimParams& p) {
  auto errs = validate(cmd);
  if (!errs.empty()) {
    std::string msg = "invalid stimulation command:";
    for (const auto& e : errs) msg += " " + e + ";";
    throw std::invalid_argument(msg);
  }
  if (r_ohm <= 0 || c_farad <= 0) throw std::invalid_argument("non-physical electrode load");
  if (n_pulses < 1) throw std::invalid_argument("need at least one pulse");

  const double h = p.step_s;
  const double amp = cmd.amplitude_ua * 1e-6;
  const double amp_anodic = amp * (1.0 + mismatch_ppm * 1e-6);
  const double pw = cmd.pulse_width_us * 1e-6;
  const double period = 1.0 / cmd.frequency_hz;
  const size_t steps_per_period = size_t(std::llround(period / h));
  const double tau = r_ohm * c_farad;
  const double decay = std::exp(-h / tau);
  const double i_cb = p.cb_current_frac * amp;

  StimTrace tr;
  tr.step_s = h;
  size_t total = steps_per_period * size_t(n_pulses);
  tr.t.reserve(total);
  tr.i.reserve(total);
  tr.v.reserve(total);
  tr.q.reserve(total);
  tr.cb_flag.reserve(total);

  double q = 0;
  for (int pulse = 0; pulse < n_pulses; ++pulse) {
    const double q_start = q;
    PulseStats stats;
    stats.q_cathodic_c = -amp * pw;
    stats.q_anodic_c = amp_anodic * pw;

    enum class Phase { Stim, CbCheck, Cb, Discharge, Idle } phase = Phase::Stim;
    CbEvent ev{pulse, 0, 0, 0};
    bool cb_ran = false;

    for (size_t k = 0; k < steps_per_period; ++k) {
      const double lt0 = double(k) * h;         // local step start
      const double lt1 = lt0 + h;
      const double gt = double(pulse) * period + lt0;
      double i_step = 0;
      uint8_t flag = 0;

      if (phase == Phase::Stim && lt0 >= 2.0 * pw) phase = Phase::CbCheck;

      if (phase == Phase::Stim) {
        // interval-average current keeps per-phase charge exact
        double frac_c = overlap(lt0, lt1, 0.0, pw) / h;
        double frac_a = overlap(lt0, lt1, pw, 2.0 * pw) / h;
        i_step = -amp * frac_c + amp_anodic * frac_a;
        q += i_step * h;
        tr.delivered_charge_c += (amp * frac_c + amp_anodic * frac_a) * h;
      }
      if (phase == Phase::CbCheck) {
        if (p.active_cb && std::abs(q / c_farad) > p.v_safe_v) {
          phase = Phase::Cb;
          cb_ran = true;
          ev.t_start_s = gt;
        } else {
          phase = p.passive_discharge ? Phase::Discharge : Phase::Idle;
        }
      }
      if (phase == Phase::Cb) {
        if (std::abs(q / c_farad) <= p.cb_target_frac * p.v_safe_v) {
          phase = p.passive_discharge ? Phase::Discharge : Phase::Idle;
        } else {
          i_step = (q > 0 ? -i_cb : i_cb);
          q += i_step * h;
          ev.duration_s += h;
          ev.charge_c += i_step * h;
          flag = 1;
        }
      }
      if (phase == Phase::Discharge) {
        double q_new = q * decay;
        i_step = (q_new - q) / h;
        q = q_new;
      }

      tr.t.push_back(gt);
      tr.i.push_back(i_step);
      tr.v.push_back(i_step * r_ohm + q / c_farad);
      tr.q.push_back(q);
      tr.cb_flag.push_back(flag);
    }
    if (cb_ran) tr.cb_events.push_back(ev);
    stats.residual_q_c = q;
    stats.balance_error = std::abs(q - q_start) / std::abs(stats.q_cathodic_c);
    tr.pulses.push_back(stats);
  }
  tr.end_voltage_v = q / c_farad;
  return tr;
}

void write_trace_csv(const StimTrace& trace, const std::string& path, uint64_t seed) {
  CsvWriter csv(path);
  csv.comment_line(seed);
  csv.header({"t", "i", "v", "q", "cb_flag"});
  for (size_t k = 0; k < trace.t.size(); ++k) {
    csv.field(trace.t[k]);
    csv.field(trace.i[k]);
    csv.field(trace.v[k]);
    csv.field(trace.q[k]);
    csv.field(uint64_t(trace.cb_flag[k]));
    csv.end_row();
  }
}

}  // namespace nt
