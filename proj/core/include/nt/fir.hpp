#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "nt/window.hpp"

namespace nt {

inline constexpr size_t kBandpassTaps = 32;
inline constexpr size_t kHilbertTaps = 31;
inline constexpr size_t kHilbertDelay = 15;  // (31-1)/2 samples group delay

struct Band {
  std::string name;
  double lo_hz = 0;
  double hi_hz = 0;
};

// Band-specific analytic signal for one channel. re is the input delayed by
// the Hilbert group delay; im is the Hilbert transformer output. Samples
// before valid_from are filter warm-up and excluded from accumulation.
struct AnalyticSignal {
  std::vector<int32_t> re_raw;
  std::vector<int32_t> im_raw;
  QFormat fmt = qfmt::filtered;
  size_t valid_from = 0;
  double sample_rate_hz = 0;

  size_t length() const { return re_raw.size(); }
};

// 32-tap linear-phase (symmetric) bandpass design: Hamming-windowed sinc
// difference, forced zero at DC, peak gain normalized to 1.
std::vector<double> design_bandpass_f64(double f_lo_hz, double f_hi_hz, double sample_rate_hz);
std::vector<FixedPoint> design_bandpass(double f_lo_hz, double f_hi_hz, double sample_rate_hz);

// 31-tap Hamming-windowed Hilbert transformer (antisymmetric, even taps 0).
std::vector<double> design_hilbert_f64();
std::vector<FixedPoint> design_hilbert();

// Magnitude response of a tap set at one frequency (direct DFT).
double frequency_response_mag(const std::vector<double>& taps, double f_hz, double sample_rate_hz);

// Coefficient storage shared across channels: one quantized tap set per band
// plus the Hilbert transformer. Immutable after construction.
class FirBank {
 public:
  explicit FirBank(double sample_rate_hz);

  // delta .. fast HFO catalogue (8 bands), all user-overridable.
  static FirBank default_bank(double sample_rate_hz);

  void add_bandpass(const std::string& name, double f_lo_hz, double f_hi_hz);
  bool has_band(const std::string& name) const;
  const std::vector<FixedPoint>& coeffs(const std::string& band) const;
  const std::vector<double>& coeffs_f64(const std::string& band) const;
  const Band& band(const std::string& name) const;
  std::vector<Band> bands() const;
  const std::vector<FixedPoint>& hilbert_coeffs() const { return hilbert_q_; }
  const std::vector<double>& hilbert_coeffs_f64() const { return hilbert_f64_; }
  double sample_rate_hz() const { return sample_rate_hz_; }

  // CSV rows: name,lo_hz,hi_hz,raw0,...,raw31 (raw Q2.16 coefficients);
  // the Hilbert row uses the reserved name "hilbert" with 31 taps.
  void export_csv(std::ostream& os) const;
  static FirBank import_csv(std::istream& is, double sample_rate_hz);

 private:
  double sample_rate_hz_;
  std::vector<std::string> order_;  // insertion order for deterministic export
  std::map<std::string, Band> bands_;
  std::map<std::string, std::vector<FixedPoint>> coeffs_;
  std::map<std::string, std::vector<double>> coeffs_f64_;
  std::vector<FixedPoint> hilbert_q_;
  std::vector<double> hilbert_f64_;
};

// Per-channel convolution with state reset at the window start (TDM register
// bank semantics). Output length equals input length; output format Q12.16.
SignalWindow filter_window(const SignalWindow& w, const FirBank& bank, const std::string& band);

// Hilbert transform of one channel: im = 31-tap Hilbert output, re = input
// delayed 15 samples. The first 31 + extra_warmup samples are flagged as
// warm-up. Window must be longer than 31 samples.
AnalyticSignal hilbert_window(const SignalWindow& w, uint32_t channel_id, const FirBank& bank,
                              size_t extra_warmup = 0);

// Float convolution with the same reset semantics (used by the oracles).
std::vector<double> convolve_reset_f64(const std::vector<double>& x, const std::vector<double>& taps);

}  // namespace nt
