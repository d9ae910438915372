#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace nt {

// Q-format descriptor. integer_bits includes the sign bit, so Q4.4 occupies
// 8 bits with raw range [-128, 127] and LSB 1/16. Total width must stay
// below 63 bits so intermediate products fit in __int128.
struct QFormat {
  uint8_t integer_bits = 1;
  uint8_t fraction_bits = 0;

  constexpr int total_bits() const { return integer_bits + fraction_bits; }
  constexpr int64_t raw_max() const { return (int64_t{1} << (total_bits() - 1)) - 1; }
  constexpr int64_t raw_min() const { return -(int64_t{1} << (total_bits() - 1)); }
  double lsb() const { return std::ldexp(1.0, -int(fraction_bits)); }
  double max_value() const { return double(raw_max()) * lsb(); }
  double min_value() const { return double(raw_min()) * lsb(); }

  bool operator==(const QFormat&) const = default;
  std::string str() const;
};

// Signed fixed-point value: raw integer plus its Q-format. All arithmetic
// saturates to the format's range (never wraps) and rounds half away from
// zero when fraction bits are dropped.
struct FixedPoint {
  int64_t raw = 0;
  QFormat fmt{};

  double value() const { return std::ldexp(double(raw), -int(fmt.fraction_bits)); }

  static FixedPoint from_value(double v, QFormat f);
  static FixedPoint from_raw(int64_t raw, QFormat f);  // saturates
};

// Common formats used by the DSP datapaths.
namespace qfmt {
inline constexpr QFormat adc_sample{10, 0};    // 10-bit ADC codes
inline constexpr QFormat filtered{12, 16};     // FIR / Hilbert output
inline constexpr QFormat coeff{2, 16};         // filter coefficients
inline constexpr QFormat accumulator{24, 8};   // feature accumulators (32 bit)
inline constexpr QFormat mean_feature{12, 12}; // LL/ACT/LMP/SE/PAC outputs
inline constexpr QFormat ratio{8, 16};         // MOB/COM/HFO ratio outputs
inline constexpr QFormat phase{3, 13};         // radians
inline constexpr QFormat trig{2, 14};          // sin/cos LUT outputs
inline constexpr QFormat plv_out{2, 14};
}  // namespace qfmt

int64_t saturate_raw(int64_t v, QFormat f);

// Shift v right by s bits (left if s < 0) rounding half away from zero.
int64_t shift_round(__int128 v, int s);

// a and b must share a Q-format; rescale explicitly otherwise.
FixedPoint fx_add(FixedPoint a, FixedPoint b);
FixedPoint fx_sub(FixedPoint a, FixedPoint b);
FixedPoint fx_mul(FixedPoint a, FixedPoint b, QFormat out);
FixedPoint fx_abs(FixedPoint a);
FixedPoint fx_neg(FixedPoint a);
FixedPoint fx_rescale(FixedPoint a, QFormat out);

}  // namespace nt
