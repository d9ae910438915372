#include "nt/fixed_point.hpp"

namespace nt {

std::string QFormat::str() const {
  return "Q" + std::to_string(int(integer_bits)) + "." + std::to_string(int(fraction_bits));
}

int64_t saturate_raw(int64_t v, QFormat f) {
  if (v > f.raw_max()) return f.raw_max();
  if (v < f.raw_min()) return f.raw_min();
  return v;
}

static int64_t saturate_raw128(__int128 v, QFormat f) {
  if (v > __int128(f.raw_max())) return f.raw_max();
  if (v < __int128(f.raw_min())) return f.raw_min();
  return int64_t(v);
}

static __int128 shift_round128(__int128 v, int s) {
  if (s <= 0) return v << (-s);
  bool neg = v < 0;
  unsigned __int128 mag = neg ? (unsigned __int128)(-v) : (unsigned __int128)v;
  unsigned __int128 half = (unsigned __int128)1 << (s - 1);
  unsigned __int128 q = (mag + half) >> s;
  return neg ? -(__int128)q : (__int128)q;
}

int64_t shift_round(__int128 v, int s) { return int64_t(shift_round128(v, s)); }

FixedPoint FixedPoint::from_value(double v, QFormat f) {
  if (!std::isfinite(v)) throw std::invalid_argument("fixed-point from non-finite value");
  double scaled = std::ldexp(v, int(f.fraction_bits));
  // round half away from zero, then saturate
  double r = std::round(scaled);
  if (r >= double(f.raw_max())) return {f.raw_max(), f};
  if (r <= double(f.raw_min())) return {f.raw_min(), f};
  return {int64_t(r), f};
}

FixedPoint FixedPoint::from_raw(int64_t raw, QFormat f) {
  return {saturate_raw(raw, f), f};
}

static void require_same_fmt(const FixedPoint& a, const FixedPoint& b) {
  if (!(a.fmt == b.fmt))
    throw std::invalid_argument("q-format mismatch: " + a.fmt.str() + " vs " + b.fmt.str());
}

FixedPoint fx_add(FixedPoint a, FixedPoint b) {
  require_same_fmt(a, b);
  return {saturate_raw128(__int128(a.raw) + __int128(b.raw), a.fmt), a.fmt};
}

FixedPoint fx_sub(FixedPoint a, FixedPoint b) {
  require_same_fmt(a, b);
  return {saturate_raw128(__int128(a.raw) - __int128(b.raw), a.fmt), a.fmt};
}

FixedPoint fx_mul(FixedPoint a, FixedPoint b, QFormat out) {
  __int128 prod = __int128(a.raw) * __int128(b.raw);
  int shift = int(a.fmt.fraction_bits) + int(b.fmt.fraction_bits) - int(out.fraction_bits);
  return {saturate_raw128(shift_round128(prod, shift), out), out};
}

FixedPoint fx_abs(FixedPoint a) {
  if (a.raw >= 0) return a;
  // abs(min_negative) saturates to max_positive
  if (a.raw == a.fmt.raw_min()) return {a.fmt.raw_max(), a.fmt};
  return {-a.raw, a.fmt};
}

FixedPoint fx_neg(FixedPoint a) {
  if (a.raw == a.fmt.raw_min()) return {a.fmt.raw_max(), a.fmt};
  return {-a.raw, a.fmt};
}

FixedPoint fx_rescale(FixedPoint a, QFormat out) {
  int shift = int(a.fmt.fraction_bits) - int(out.fraction_bits);
  return {saturate_raw128(shift_round128(__int128(a.raw), shift), out), out};
}

}  // namespace nt
