#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nt/fir.hpp"
#include "nt/window.hpp"

namespace nt {

enum class FeatureKind : uint8_t {
  LL = 0,
  ACT = 1,
  MOB = 2,
  COM = 3,
  LMP = 4,
  SE = 5,
  HFO_RATIO = 6,
  PLV = 7,
  PAC = 8,
};

const char* to_string(FeatureKind k);
FeatureKind feature_kind_from_string(const std::string& s);
bool kind_uses_filter(FeatureKind k);

// One biomarker request. PLV carries a second channel; PAC and HFO_RATIO
// carry a second band (phase/slow band first, amplitude/fast band second).
struct FeatureSpec {
  FeatureKind kind = FeatureKind::LL;
  uint32_t channel = 0;
  std::optional<uint32_t> channel2;
  std::string band;
  std::string band2;

  void validate() const;
  std::string str() const;
  bool operator==(const FeatureSpec&) const = default;
};

// Grammar: KIND:ch[,ch2][:band[,band2]]  e.g. "SE:2:beta", "PLV:0,1:theta",
// "PAC:4:theta,ripple". HFO_RATIO defaults to bands hfo1,hfo2.
FeatureSpec parse_feature_spec(const std::string& s);

struct FeatureVector {
  std::vector<FixedPoint> values;
  std::vector<FeatureSpec> specs;

  size_t size() const { return values.size(); }
};

// Result of the reciprocal-multiply ratio datapath. saturated is set iff the
// denominator was below the minimum threshold (one accumulator LSB).
struct RatioResult {
  FixedPoint value;
  bool saturated = false;
};

// Instantaneous phase/amplitude sample of an analytic signal.
struct PhasePoint {
  FixedPoint theta;  // radians in (-pi, pi], Q3.13
  FixedPoint amp;    // l-inf approximated envelope, >= 0
};

// num/den via denominator normalization, 64-entry reciprocal LUT with linear
// interpolation and shift restore. Inputs share a scale (it cancels); output
// is Q8.16. Relative error <= 1% over the representable range.
RatioResult ratio_calculate(uint64_t num_raw, uint64_t den_raw);

// --- feature operations (fixed point, hardware-faithful) ---

FixedPoint line_length(const SignalWindow& w, uint32_t channel_id);
FixedPoint hjorth_activity(const SignalWindow& w, uint32_t channel_id);
RatioResult hjorth_mobility(const SignalWindow& w, uint32_t channel_id);
RatioResult hjorth_complexity(const SignalWindow& w, uint32_t channel_id);
FixedPoint lmp(const SignalWindow& w, uint32_t channel_id);
FixedPoint spectral_energy(const SignalWindow& w, const FirBank& bank, const std::string& band,
                           uint32_t channel_id);
RatioResult hfo_ratio(const SignalWindow& w, const FirBank& bank, uint32_t channel_id,
                      const std::string& slow_band = "hfo1", const std::string& fast_band = "hfo2");

// Four-quadrant phase via octant reduction, linear arctangent approximation
// atan(z) ~ z/(1 + 0.28 z^2) on |z| <= 1, additive 32-entry LUT correction,
// and quadrant restoration. Absolute error <= 0.01 rad. (0,0) is an error.
FixedPoint laa_phase(FixedPoint re, FixedPoint im);

// max(|re|, |im|): lower bound of the true envelope within [mag/sqrt(2), mag].
FixedPoint linf_envelope(FixedPoint re, FixedPoint im);

PhasePoint phase_point(FixedPoint re, FixedPoint im);

FixedPoint plv(const AnalyticSignal& a, const AnalyticSignal& b);
FixedPoint pac(const AnalyticSignal& lo, const AnalyticSignal& hi);

// Sequential on-demand extraction in spec order. Filters run only for specs
// that need them; temporal features read the raw window directly.
FeatureVector extract(const SignalWindow& w, const FirBank& bank,
                      std::span<const FeatureSpec> specs);

namespace detail {

// round(num/den * 2^out_frac) through the reciprocal LUT; false if den == 0.
bool recip_mul_u64(uint64_t num, uint64_t den, int out_frac, int64_t* out);

// Quarter-wave LUT sin/cos (64 entries, linear interpolation, symmetry
// unfolding). theta must be Q3.13; result is Q2.14, |error| <= 2^-8.
FixedPoint sin_lut(FixedPoint theta);
FixedPoint cos_lut(FixedPoint theta);

// Two-segment alpha-max-beta-min approximation of sqrt(a^2+b^2) on
// nonnegative raws of one scale: max + min/4 below min/max = 1/2, else
// 7/8 max + 1/2 min. Relative error within [-2.8%, +3.2%]; exact when
// min == 0.
int64_t magnitude_approx(int64_t a_raw, int64_t b_raw);

// Saturating Q24.8 accumulator of |x| (or x when signed_sum) rescaled from
// in_fmt, skipping the first `skip` samples.
int64_t accumulate_abs(std::span<const int32_t> x, QFormat in_fmt, size_t skip);
int64_t accumulate_signed(std::span<const int32_t> x, QFormat in_fmt, size_t skip);

// mean = acc/count scaled into out; power-of-two counts use a shift, others
// the reciprocal LUT. acc is a Q24.8 raw (sign handled).
FixedPoint normalize_mean(int64_t acc_raw, size_t count, QFormat out);

// Phase constants (Q3.13 raws).
inline constexpr int64_t kHalfPiRaw = 12868;
inline constexpr int64_t kPiRaw = 25736;
inline constexpr int64_t kTwoPiRaw = 51472;

int64_t wrap_phase_raw(int64_t raw);

}  // namespace detail

}  // namespace nt
