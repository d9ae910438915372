#include "nt/dsl_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "nt/csv.hpp"

namespace nt {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr int32_t kIntegratorMax = (1 << 18) - 1;  // 19-bit signed bounds

double clampd(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }
}  // namespace

double coarse_dac_volts(uint16_t code, const DslParams& p) {
  double lsb = 2.0 * p.dac_range_v / 512.0;
  return (double(code) - 255.5) * lsb;
}

CoarseResult coarse_search(double offset_v, const DslParams& p) {
  const double lsb = 2.0 * p.dac_range_v / 512.0;
  uint16_t code = 0;
  // 9 comparator decisions, MSB first, against the plain binary DAC levels
  for (int bit = 8; bit >= 0; --bit) {
    uint16_t trial = uint16_t(code | (1u << bit));
    double level = (double(trial) - 256.0) * lsb;
    if (offset_v >= level) code = trial;
  }
  return {code, offset_v - coarse_dac_volts(code, p)};
}

int32_t dsm_step(int32_t word19, int64_t& residue) {
  int64_t v = int64_t(word19) + residue;
  int64_t out = v >> 10;  // floor
  out = std::clamp<int64_t>(out, -256, 255);
  residue = v - (out << 10);
  residue = std::clamp<int64_t>(residue, -(1 << 12), (1 << 12));
  return int32_t(out);
}

double fine_loop_step(double input_v, DslState& state, const DslParams& p) {
  const double dac_lsb = 2.0 * p.dac_range_v / 512.0;
  const double adc_lsb = 2.0 * p.adc_range_v / 1024.0;

  int32_t word = (int32_t(state.coarse_code) - 256) * 1024 + 512 + state.integrator;
  word = std::clamp(word, -kIntegratorMax - 1, kIntegratorMax);

  // delta-sigma modulate the 19-bit word onto the 9-bit DAC at the OSR; the
  // anti-aliasing integrator averages the sub-steps
  int64_t dac_sum = 0;
  for (int k = 0; k < p.osr; ++k) dac_sum += dsm_step(word, state.dsm_residue);
  double fb_v = double(dac_sum) / double(p.osr) * dac_lsb;

  double y = input_v - fb_v;
  double y_clip = clampd(y, -p.adc_range_v, p.adc_range_v);
  int32_t code = int32_t(std::clamp(std::llround(y_clip / adc_lsb), -512LL, 511LL));

  int64_t next = int64_t(state.integrator) + (int64_t(code) << state.shift_gain);
  state.integrator = int32_t(std::clamp<int64_t>(next, -kIntegratorMax, kIntegratorMax));
  return y_clip;
}

EdoScenario EdoScenario::from_config(const Config& cfg) {
  EdoScenario s;
  s.n_windows = int(cfg.get_int("windows", s.n_windows));
  s.window_len_s = cfg.get_double("window_len_s", s.window_len_s);
  s.sample_rate_hz = cfg.get_double("sample_rate_hz", s.sample_rate_hz);
  s.n_channels = int(cfg.get_int("channels", s.n_channels));
  s.offset_min_mv = cfg.get_double("offset_min_mv", s.offset_min_mv);
  s.offset_max_mv = cfg.get_double("offset_max_mv", s.offset_max_mv);
  s.reshuffle_each_window = cfg.get_bool("reshuffle_each_window", s.reshuffle_each_window);
  s.seed = uint64_t(cfg.get_int("seed", int64_t(s.seed)));
  s.shift_gain = int(cfg.get_int("shift_gain", s.shift_gain));
  s.noise_mv = cfg.get_double("noise_mv", s.noise_mv);
  std::string mode = cfg.get_str("mode", "two-step");
  if (mode == "two-step")
    s.mode = Mode::TwoStep;
  else if (mode == "fine-only")
    s.mode = Mode::FineOnly;
  else if (mode == "disabled")
    s.mode = Mode::Disabled;
  else
    throw std::runtime_error("scenario mode must be two-step, fine-only or disabled");
  auto tones = cfg.get_list("tones");
  if (!tones.empty()) {
    s.tones.clear();
    for (const auto& t : tones) {
      auto sep = t.find(':');
      if (sep == std::string::npos)
        throw std::runtime_error("tone must be freq_hz:amp_mv, got " + t);
      s.tones.push_back({std::stod(t.substr(0, sep)), std::stod(t.substr(sep + 1))});
    }
  }
  if (s.n_windows < 1 || s.n_channels < 1 || s.sample_rate_hz <= 0 || s.window_len_s <= 0)
    throw std::runtime_error("invalid scenario geometry");
  if (s.offset_max_mv > 50.0 + 1e-9)
    throw std::runtime_error("offsets beyond +/-50 mV are outside the model");
  return s;
}

ScenarioReport run_scenario(const EdoScenario& s) {
  std::mt19937_64 rng(s.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  DslParams params;
  params.shift_gain = s.shift_gain;
  const size_t n = size_t(std::llround(s.window_len_s * s.sample_rate_hz));

  ScenarioReport rep;
  rep.min_unsaturated_fraction = 1.0;
  rep.min_correlation = 1.0;

  for (int ch = 0; ch < s.n_channels; ++ch) {
    // per-channel tone phases and seeded noise
    std::vector<double> phase(s.tones.size());
    for (auto& ph : phase) ph = 2.0 * kPi * uni(rng);
    DslState state;
    state.shift_gain = s.shift_gain;
    double offset = 0;

    for (int win = 0; win < s.n_windows; ++win) {
      if (win == 0 || s.reshuffle_each_window) {
        double mag = s.offset_min_mv + (s.offset_max_mv - s.offset_min_mv) * uni(rng);
        offset = (uni(rng) < 0.5 ? -1.0 : 1.0) * mag * 1e-3;
      }
      size_t t0 = 0;
      if (s.mode == EdoScenario::Mode::TwoStep) {
        // coarse SAR runs in the first per-channel sampling slot
        auto coarse = coarse_search(offset, params);
        state.coarse_code = coarse.code;
        t0 = 1;
      } else if (s.mode == EdoScenario::Mode::FineOnly) {
        state.coarse_code = 256;  // mid-scale, fine loop must absorb the EDO
      }

      std::vector<double> clean, captured;
      clean.reserve(n - t0);
      captured.reserve(n - t0);
      size_t unsaturated = 0;
      for (size_t t = t0; t < n; ++t) {
        double ts = (double(win) * double(n) + double(t)) / s.sample_rate_hz;
        double sig = 0;
        for (size_t k = 0; k < s.tones.size(); ++k)
          sig += s.tones[k].amp_mv * 1e-3 * std::sin(2.0 * kPi * s.tones[k].freq_hz * ts + phase[k]);
        sig += s.noise_mv * 1e-3 * gauss(rng);
        double input = sig + offset;
        double y;
        if (s.mode == EdoScenario::Mode::Disabled) {
          y = clampd(input, -params.adc_range_v, params.adc_range_v);
        } else {
          y = fine_loop_step(input, state, params);
        }
        // clamped output sits exactly on a rail when saturated
        if (std::abs(y) < params.adc_range_v) ++unsaturated;
        clean.push_back(sig);
        captured.push_back(y);
      }
      double frac = double(unsaturated) / double(n - t0);
      // Pearson correlation; zero variance (rail-stuck output) counts as 0
      double corr = 0;
      {
        double ma = 0, mb = 0;
        for (size_t i = 0; i < clean.size(); ++i) {
          ma += clean[i];
          mb += captured[i];
        }
        ma /= double(clean.size());
        mb /= double(clean.size());
        double sab = 0, saa = 0, sbb = 0;
        for (size_t i = 0; i < clean.size(); ++i) {
          sab += (clean[i] - ma) * (captured[i] - mb);
          saa += (clean[i] - ma) * (clean[i] - ma);
          sbb += (captured[i] - mb) * (captured[i] - mb);
        }
        if (saa > 0 && sbb > 0) corr = sab / std::sqrt(saa * sbb);
      }
      rep.rows.push_back({win, uint32_t(ch), frac, corr});
      rep.min_unsaturated_fraction = std::min(rep.min_unsaturated_fraction, frac);
      rep.min_correlation = std::min(rep.min_correlation, corr);
    }
  }
  return rep;
}

void write_csv(const ScenarioReport& rep, const std::string& path, uint64_t seed) {
  CsvWriter csv(path);
  csv.comment_line(seed);
  csv.header({"window", "channel", "unsaturated_fraction", "correlation"});
  for (const auto& r : rep.rows) {
    csv.field(int64_t(r.window));
    csv.field(uint64_t(r.channel));
    csv.field(r.unsaturated_fraction);
    csv.field(r.correlation);
    csv.end_row();
  }
}

}  // namespace nt
