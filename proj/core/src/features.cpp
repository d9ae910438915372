#include "nt/features.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <map>
#include <stdexcept>

namespace nt {

const char* to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::LL: return "LL";
    case FeatureKind::ACT: return "ACT";
    case FeatureKind::MOB: return "MOB";
    case FeatureKind::COM: return "COM";
    case FeatureKind::LMP: return "LMP";
    case FeatureKind::SE: return "SE";
    case FeatureKind::HFO_RATIO: return "HFO_RATIO";
    case FeatureKind::PLV: return "PLV";
    case FeatureKind::PAC: return "PAC";
  }
  return "?";
}

FeatureKind feature_kind_from_string(const std::string& s) {
  static const std::map<std::string, FeatureKind> m = {
      {"LL", FeatureKind::LL},   {"ACT", FeatureKind::ACT},
      {"MOB", FeatureKind::MOB}, {"COM", FeatureKind::COM},
      {"LMP", FeatureKind::LMP}, {"SE", FeatureKind::SE},
      {"HFO_RATIO", FeatureKind::HFO_RATIO},
      {"PLV", FeatureKind::PLV}, {"PAC", FeatureKind::PAC}};
  auto it = m.find(s);
  if (it == m.end()) throw std::invalid_argument("unknown feature kind: " + s);
  return it->second;
}

bool kind_uses_filter(FeatureKind k) {
  switch (k) {
    case FeatureKind::SE:
    case FeatureKind::HFO_RATIO:
    case FeatureKind::PLV:
    case FeatureKind::PAC:
      return true;
    default:
      return false;
  }
}

void FeatureSpec::validate() const {
  const bool has_band = !band.empty();
  const bool has_band2 = !band2.empty();
  const bool has_ch2 = channel2.has_value();
  switch (kind) {
    case FeatureKind::LL:
    case FeatureKind::ACT:
    case FeatureKind::MOB:
    case FeatureKind::COM:
    case FeatureKind::LMP:
      if (has_band || has_band2 || has_ch2)
        throw std::invalid_argument(std::string(to_string(kind)) + " takes one channel, no band");
      break;
    case FeatureKind::SE:
      if (!has_band || has_band2 || has_ch2)
        throw std::invalid_argument("SE needs exactly one band");
      break;
    case FeatureKind::HFO_RATIO:
      if (!has_band || !has_band2 || has_ch2)
        throw std::invalid_argument("HFO_RATIO needs two bands");
      break;
    case FeatureKind::PLV:
      if (!has_band || has_band2 || !has_ch2)
        throw std::invalid_argument("PLV needs two channels and one band");
      break;
    case FeatureKind::PAC:
      if (!has_band || !has_band2 || has_ch2)
        throw std::invalid_argument("PAC needs one channel and two bands");
      break;
  }
}

std::string FeatureSpec::str() const {
  std::string s = to_string(kind);
  s += ":" + std::to_string(channel);
  if (channel2) s += "," + std::to_string(*channel2);
  if (!band.empty()) {
    s += ":" + band;
    if (!band2.empty()) s += "," + band2;
  }
  return s;
}

FeatureSpec parse_feature_spec(const std::string& s) {
  FeatureSpec spec;
  std::vector<std::string> parts;
  size_t start = 0;
  while (true) {
    size_t p = s.find(':', start);
    if (p == std::string::npos) {
      parts.push_back(s.substr(start));
      break;
    }
    parts.push_back(s.substr(start, p - start));
    start = p + 1;
  }
  if (parts.size() < 2 || parts.size() > 3)
    throw std::invalid_argument("bad feature spec '" + s + "' (want KIND:ch[,ch2][:band[,band2]])");
  spec.kind = feature_kind_from_string(parts[0]);
  auto comma = parts[1].find(',');
  if (comma == std::string::npos) {
    spec.channel = uint32_t(std::stoul(parts[1]));
  } else {
    spec.channel = uint32_t(std::stoul(parts[1].substr(0, comma)));
    spec.channel2 = uint32_t(std::stoul(parts[1].substr(comma + 1)));
  }
  if (parts.size() == 3) {
    auto c2 = parts[2].find(',');
    if (c2 == std::string::npos) {
      spec.band = parts[2];
    } else {
      spec.band = parts[2].substr(0, c2);
      spec.band2 = parts[2].substr(c2 + 1);
    }
  }
  if (spec.kind == FeatureKind::HFO_RATIO && spec.band.empty()) {
    spec.band = "hfo1";
    spec.band2 = "hfo2";
  }
  spec.validate();
  return spec;
}

namespace detail {

// ---- reciprocal LUT -------------------------------------------------------

// R[i] = round(2^37 / (64+i)), the Q2.30 reciprocal of d = (64+i)/128.
static const std::array<uint64_t, 65>& recip_table() {
  static const auto table = [] {
    std::array<uint64_t, 65> t{};
    for (int i = 0; i <= 64; ++i) {
      long double d = (long double)(64 + i) / 128.0L;
      t[size_t(i)] = (uint64_t)llroundl((long double)(1ULL << 30) / d);
    }
    return t;
  }();
  return table;
}

bool recip_mul_u64(uint64_t num, uint64_t den, int out_frac, int64_t* out) {
  if (den == 0) return false;
  if (num == 0) {
    *out = 0;
    return true;
  }
  const auto& R = recip_table();
  int bw = std::bit_width(den);
  int nz = 64 - bw;
  uint64_t den_n = den << nz;                 // [2^63, 2^64)
  uint32_t idx = uint32_t((den_n >> 57) & 0x3F);
  uint64_t frac16 = (den_n >> 41) & 0xFFFF;   // interpolation fraction
  // r_ext ~ (1/d) * 2^46, linear interpolation between LUT nodes
  int64_t slope = int64_t(R[idx + 1]) - int64_t(R[idx]);
  int64_t r_ext = int64_t(R[idx] << 16) + slope * int64_t(frac16);
  // num/den * 2^f = num * r_ext * 2^(nz - 110 + f)
  unsigned __int128 prod = (unsigned __int128)num * (unsigned __int128)r_ext;
  int shift = 110 - nz - out_frac;
  __int128 v = (__int128)prod;
  if (shift <= 0) {
    if (shift < -63) return false;
    v <<= -shift;
  } else {
    unsigned __int128 half = (unsigned __int128)1 << (shift - 1);
    v = (__int128)((prod + half) >> shift);
  }
  if (v > INT64_MAX) {
    *out = INT64_MAX;
    return true;
  }
  *out = int64_t(v);
  return true;
}

// ---- trig LUT -------------------------------------------------------------

// 64-entry quarter-wave sine, Q2.14, with one extra node for interpolation.
static const std::array<int32_t, 65>& sine_table() {
  static const auto table = [] {
    std::array<int32_t, 65> t{};
    for (int i = 0; i <= 64; ++i)
      t[size_t(i)] = int32_t(llround(std::sin(double(i) / 64.0 * M_PI / 2.0) * 16384.0));
    return t;
  }();
  return table;
}

int64_t wrap_phase_raw(int64_t raw) {
  while (raw > kPiRaw) raw -= kTwoPiRaw;
  while (raw < -kPiRaw) raw += kTwoPiRaw;
  if (raw == -kPiRaw) raw = kPiRaw;  // keep (-pi, pi]
  return raw;
}

// Quarter-wave evaluation at position pos in [0, kHalfPiRaw].
static int64_t quarter_sine(int64_t pos) {
  const auto& S = sine_table();
  int64_t pos64 = pos * 64;
  int64_t idx = pos64 / kHalfPiRaw;
  if (idx >= 64) return S[64];
  int64_t rem = pos64 - idx * kHalfPiRaw;
  int64_t lo = S[size_t(idx)], hi = S[size_t(idx) + 1];
  return lo + ((hi - lo) * rem + kHalfPiRaw / 2) / kHalfPiRaw;
}

static int64_t sin_raw_q14(int64_t theta_raw) {
  int64_t p = theta_raw % kTwoPiRaw;
  if (p < 0) p += kTwoPiRaw;
  int64_t q = p / kHalfPiRaw;  // 0..3
  int64_t f = p - q * kHalfPiRaw;
  switch (q) {
    case 0: return quarter_sine(f);
    case 1: return quarter_sine(kHalfPiRaw - f);
    case 2: return -quarter_sine(f);
    default: return -quarter_sine(kHalfPiRaw - f);
  }
}

FixedPoint sin_lut(FixedPoint theta) {
  if (!(theta.fmt == qfmt::phase)) theta = fx_rescale(theta, qfmt::phase);
  return {saturate_raw(sin_raw_q14(theta.raw), qfmt::trig), qfmt::trig};
}

FixedPoint cos_lut(FixedPoint theta) {
  if (!(theta.fmt == qfmt::phase)) theta = fx_rescale(theta, qfmt::phase);
  return {saturate_raw(sin_raw_q14(theta.raw + kHalfPiRaw), qfmt::trig), qfmt::trig};
}

// ---- magnitude ------------------------------------------------------------

int64_t magnitude_approx(int64_t a_raw, int64_t b_raw) {
  int64_t mx = std::max(a_raw, b_raw);
  int64_t mn = std::min(a_raw, b_raw);
  if (2 * mn <= mx) return mx + shift_round(mn, 2);
  return mx - shift_round(mx, 3) + shift_round(mn, 1);
}

// ---- accumulation ---------------------------------------------------------

static int64_t sat_acc_add(int64_t acc, int64_t term) {
  return saturate_raw(acc + term, qfmt::accumulator);
}

int64_t accumulate_abs(std::span<const int32_t> x, QFormat in_fmt, size_t skip) {
  int shift = int(in_fmt.fraction_bits) - int(qfmt::accumulator.fraction_bits);
  int64_t acc = 0;
  for (size_t t = skip; t < x.size(); ++t) {
    int64_t v = std::abs(int64_t(x[t]));
    acc = sat_acc_add(acc, shift_round(__int128(v), shift));
  }
  return acc;
}

int64_t accumulate_signed(std::span<const int32_t> x, QFormat in_fmt, size_t skip) {
  int shift = int(in_fmt.fraction_bits) - int(qfmt::accumulator.fraction_bits);
  int64_t acc = 0;
  for (size_t t = skip; t < x.size(); ++t)
    acc = sat_acc_add(acc, shift_round(__int128(int64_t(x[t])), shift));
  return acc;
}

FixedPoint normalize_mean(int64_t acc_raw, size_t count, QFormat out) {
  if (count == 0) throw std::invalid_argument("mean over zero samples");
  bool neg = acc_raw < 0;
  uint64_t mag = neg ? uint64_t(-acc_raw) : uint64_t(acc_raw);
  int64_t raw;
  int fdelta = int(out.fraction_bits) - int(qfmt::accumulator.fraction_bits);
  if (std::has_single_bit(count)) {
    int s = std::countr_zero(count) - fdelta;
    raw = shift_round(__int128(mag), s);
  } else {
    if (!recip_mul_u64(mag, uint64_t(count), fdelta, &raw))
      throw std::logic_error("normalize_mean: zero count");
  }
  if (neg) raw = -raw;
  return {saturate_raw(raw, out), out};
}

}  // namespace detail

// ---- ratio datapath -------------------------------------------------------

RatioResult ratio_calculate(uint64_t num_raw, uint64_t den_raw) {
  RatioResult r;
  r.value.fmt = qfmt::ratio;
  if (den_raw == 0) {  // below the one-LSB minimum threshold
    r.saturated = true;
    r.value.raw = qfmt::ratio.raw_max();
    return r;
  }
  int64_t raw = 0;
  detail::recip_mul_u64(num_raw, den_raw, int(qfmt::ratio.fraction_bits), &raw);
  r.value.raw = saturate_raw(raw, qfmt::ratio);
  return r;
}

// ---- temporal features ----------------------------------------------------

static const std::vector<int32_t>& channel_samples(const SignalWindow& w, uint32_t id) {
  return w.samples[w.channel_index(id)];
}

FixedPoint line_length(const SignalWindow& w, uint32_t channel_id) {
  const auto& x = channel_samples(w, channel_id);
  if (x.size() < 2) throw std::invalid_argument("line_length needs at least 2 samples");
  int shift = int(w.fmt.fraction_bits) - int(qfmt::accumulator.fraction_bits);
  int64_t acc = 0;
  for (size_t t = 1; t < x.size(); ++t) {
    int64_t d = std::abs(int64_t(x[t]) - int64_t(x[t - 1]));
    acc = saturate_raw(acc + shift_round(__int128(d), shift), qfmt::accumulator);
  }
  return detail::normalize_mean(acc, x.size(), qfmt::mean_feature);
}

FixedPoint hjorth_activity(const SignalWindow& w, uint32_t channel_id) {
  const auto& x = channel_samples(w, channel_id);
  if (x.empty()) throw std::invalid_argument("empty window");
  int64_t acc = detail::accumulate_abs(x, w.fmt, 0);
  return detail::normalize_mean(acc, x.size(), qfmt::mean_feature);
}

static std::vector<int32_t> first_difference(const std::vector<int32_t>& x) {
  std::vector<int32_t> d;
  d.reserve(x.size() > 0 ? x.size() - 1 : 0);
  for (size_t t = 1; t < x.size(); ++t) d.push_back(x[t] - x[t - 1]);
  return d;
}

RatioResult hjorth_mobility(const SignalWindow& w, uint32_t channel_id) {
  const auto& x = channel_samples(w, channel_id);
  if (x.size() < 2) throw std::invalid_argument("mobility needs at least 2 samples");
  auto dx = first_difference(x);
  int64_t num = detail::accumulate_abs(dx, w.fmt, 0);
  int64_t den = detail::accumulate_abs(x, w.fmt, 0);
  return ratio_calculate(uint64_t(num), uint64_t(den));
}

RatioResult hjorth_complexity(const SignalWindow& w, uint32_t channel_id) {
  const auto& x = channel_samples(w, channel_id);
  if (x.size() < 3) throw std::invalid_argument("complexity needs at least 3 samples");
  auto dx = first_difference(x);
  auto ddx = first_difference(dx);
  uint64_t sx = uint64_t(detail::accumulate_abs(x, w.fmt, 0));
  uint64_t sddx = uint64_t(detail::accumulate_abs(ddx, w.fmt, 0));
  uint64_t sdx = uint64_t(detail::accumulate_abs(dx, w.fmt, 0));
  // (sum|x| * sum|d2x|) / (sum|dx|)^2; the common Q24.8 scale cancels
  return ratio_calculate(sx * sddx, sdx * sdx);
}

FixedPoint lmp(const SignalWindow& w, uint32_t channel_id) {
  const auto& x = channel_samples(w, channel_id);
  if (x.empty()) throw std::invalid_argument("empty window");
  int64_t acc = detail::accumulate_signed(x, w.fmt, 0);
  return detail::normalize_mean(acc, x.size(), qfmt::mean_feature);
}

// ---- spectral features ----------------------------------------------------

static std::vector<int32_t> filter_channel(const SignalWindow& w, const FirBank& bank,
                                           const std::string& band, uint32_t channel_id) {
  const auto& taps = bank.coeffs(band);
  const auto& x = channel_samples(w, channel_id);
  std::vector<int32_t> out(x.size());
  int shift = int(qfmt::coeff.fraction_bits) + int(w.fmt.fraction_bits) -
              int(qfmt::filtered.fraction_bits);
  for (size_t t = 0; t < x.size(); ++t) {
    int64_t acc = 0;
    size_t kmax = std::min(taps.size(), t + 1);
    for (size_t k = 0; k < kmax; ++k) acc += taps[k].raw * int64_t(x[t - k]);
    out[t] = int32_t(saturate_raw(shift_round(__int128(acc), shift), qfmt::filtered));
  }
  return out;
}

// Warm-up: one sample short of the bandpass tap count.
static constexpr size_t kFilterWarmup = 31;

FixedPoint spectral_energy(const SignalWindow& w, const FirBank& bank, const std::string& band,
                           uint32_t channel_id) {
  auto y = filter_channel(w, bank, band, channel_id);
  size_t skip = y.size() > kFilterWarmup ? kFilterWarmup : 0;
  int64_t acc = detail::accumulate_abs(y, qfmt::filtered, skip);
  return detail::normalize_mean(acc, y.size(), qfmt::mean_feature);
}

RatioResult hfo_ratio(const SignalWindow& w, const FirBank& bank, uint32_t channel_id,
                      const std::string& slow_band, const std::string& fast_band) {
  if (w.sample_rate_hz < 2 * bank.band(fast_band).hi_hz)
    throw std::invalid_argument("sample rate too low for the fast HFO band");
  auto y1 = filter_channel(w, bank, slow_band, channel_id);
  auto y2 = filter_channel(w, bank, fast_band, channel_id);
  size_t skip = y1.size() > kFilterWarmup ? kFilterWarmup : 0;
  int64_t num = detail::accumulate_abs(y1, qfmt::filtered, skip);
  int64_t den = detail::accumulate_abs(y2, qfmt::filtered, skip);
  return ratio_calculate(uint64_t(num), uint64_t(den));
}

// ---- phase features -------------------------------------------------------

namespace {

// atan residual correction: 32 entries over z in [0,1], sampled at segment
// centers against a double-precision arctangent.
const std::array<int32_t, 32>& laa_correction_table() {
  static const auto table = [] {
    std::array<int32_t, 32> t{};
    const double k = 18350.0 / 65536.0;  // 0.28 as stored in Q16
    for (int i = 0; i < 32; ++i) {
      double zc = (double(i) + 0.5) / 32.0;
      double core = zc / (1.0 + k * zc * zc);
      t[size_t(i)] = int32_t(llround((std::atan(zc) - core) * 8192.0));
    }
    return t;
  }();
  return table;
}

int64_t laa_octant_raw(uint64_t zn, uint64_t zd) {
  // z = zn/zd in [0,1] -> Q1.16
  int64_t z_raw = 0;
  detail::recip_mul_u64(zn, zd, 16, &z_raw);
  if (z_raw > 65536) z_raw = 65536;
  // core = z / (1 + 0.28 z^2), evaluated through the shared reciprocal LUT
  int64_t z2 = shift_round(__int128(z_raw) * z_raw, 16);
  int64_t den_raw = 65536 + shift_round(__int128(18350) * z2, 16);
  int64_t core_raw = 0;
  detail::recip_mul_u64(uint64_t(z_raw), uint64_t(den_raw), 13, &core_raw);
  size_t idx = std::min<size_t>(31, size_t(z_raw >> 11));
  return core_raw + laa_correction_table()[idx];
}

}  // namespace

FixedPoint laa_phase(FixedPoint re, FixedPoint im) {
  if (re.raw == 0 && im.raw == 0)
    throw std::invalid_argument("laa_phase undefined at (0, 0)");
  if (!(re.fmt == im.fmt)) im = fx_rescale(im, re.fmt);
  uint64_t a = uint64_t(std::abs(re.raw));
  uint64_t b = uint64_t(std::abs(im.raw));
  int64_t theta0;
  if (b <= a) {
    theta0 = laa_octant_raw(b, a);
  } else {
    theta0 = detail::kHalfPiRaw - laa_octant_raw(a, b);
  }
  int64_t theta;
  if (re.raw >= 0) {
    theta = (im.raw >= 0) ? theta0 : -theta0;
  } else {
    theta = (im.raw >= 0) ? detail::kPiRaw - theta0 : -(detail::kPiRaw - theta0);
  }
  theta = detail::wrap_phase_raw(theta);
  return {saturate_raw(theta, qfmt::phase), qfmt::phase};
}

FixedPoint linf_envelope(FixedPoint re, FixedPoint im) {
  if (!(re.fmt == im.fmt)) im = fx_rescale(im, re.fmt);
  FixedPoint ar = fx_abs(re), ai = fx_abs(im);
  return ar.raw >= ai.raw ? ar : ai;
}

PhasePoint phase_point(FixedPoint re, FixedPoint im) {
  return {laa_phase(re, im), linf_envelope(re, im)};
}

namespace {

int64_t phase_or_zero(int32_t re_raw, int32_t im_raw) {
  if (re_raw == 0 && im_raw == 0) return 0;  // silent sample: zero phase
  FixedPoint re{re_raw, qfmt::filtered}, im{im_raw, qfmt::filtered};
  return laa_phase(re, im).raw;
}

}  // namespace

FixedPoint plv(const AnalyticSignal& a, const AnalyticSignal& b) {
  size_t from = std::max(a.valid_from, b.valid_from);
  if (a.length() != b.length()) throw std::invalid_argument("plv: length mismatch");
  if (a.length() <= from) throw std::invalid_argument("plv: window shorter than warm-up");
  int64_t s_acc = 0, c_acc = 0;
  const int shift = int(qfmt::trig.fraction_bits) - int(qfmt::accumulator.fraction_bits);
  size_t count = 0;
  for (size_t t = from; t < a.length(); ++t) {
    int64_t ta = phase_or_zero(a.re_raw[t], a.im_raw[t]);
    int64_t tb = phase_or_zero(b.re_raw[t], b.im_raw[t]);
    int64_t dt = detail::wrap_phase_raw(ta - tb);
    s_acc = saturate_raw(s_acc + shift_round(__int128(detail::sin_lut({dt, qfmt::phase}).raw), shift),
                         qfmt::accumulator);
    c_acc = saturate_raw(c_acc + shift_round(__int128(detail::cos_lut({dt, qfmt::phase}).raw), shift),
                         qfmt::accumulator);
    ++count;
  }
  int64_t mag = detail::magnitude_approx(std::abs(s_acc), std::abs(c_acc));
  return detail::normalize_mean(mag, count, qfmt::plv_out);
}

FixedPoint pac(const AnalyticSignal& lo, const AnalyticSignal& hi) {
  size_t from = std::max(lo.valid_from, hi.valid_from);
  if (lo.length() != hi.length()) throw std::invalid_argument("pac: length mismatch");
  if (lo.length() <= from) throw std::invalid_argument("pac: window shorter than warm-up");
  int64_t s_acc = 0, c_acc = 0;
  // A (Q12.16) * sin (Q2.14) -> rescale product into the Q24.8 accumulator
  const int shift = int(qfmt::filtered.fraction_bits) + int(qfmt::trig.fraction_bits) -
                    int(qfmt::accumulator.fraction_bits);
  size_t count = 0;
  for (size_t t = from; t < lo.length(); ++t) {
    int64_t theta = phase_or_zero(lo.re_raw[t], lo.im_raw[t]);
    int64_t amp = std::max(std::abs(int64_t(hi.re_raw[t])), std::abs(int64_t(hi.im_raw[t])));
    int64_t sv = detail::sin_lut({theta, qfmt::phase}).raw;
    int64_t cv = detail::cos_lut({theta, qfmt::phase}).raw;
    s_acc = saturate_raw(s_acc + shift_round(__int128(amp) * sv, shift), qfmt::accumulator);
    c_acc = saturate_raw(c_acc + shift_round(__int128(amp) * cv, shift), qfmt::accumulator);
    ++count;
  }
  int64_t mag = detail::magnitude_approx(std::abs(s_acc), std::abs(c_acc));
  return detail::normalize_mean(mag, count, qfmt::mean_feature);
}

// ---- extraction -----------------------------------------------------------

namespace {

struct ExtractCache {
  const SignalWindow& w;
  const FirBank& bank;
  std::map<std::pair<uint32_t, std::string>, AnalyticSignal> analytic;

  // Analytic signal of a bandpass-filtered channel; bandpass warm-up extends
  // the Hilbert warm-up.
  const AnalyticSignal& get_analytic(uint32_t ch, const std::string& band) {
    auto key = std::make_pair(ch, band);
    auto it = analytic.find(key);
    if (it != analytic.end()) return it->second;
    SignalWindow filtered;
    filtered.channel_ids = {ch};
    filtered.sample_rate_hz = w.sample_rate_hz;
    filtered.fmt = qfmt::filtered;
    filtered.samples.push_back(filter_channel(w, bank, band, ch));
    AnalyticSignal a = hilbert_window(filtered, ch, bank, kFilterWarmup);
    return analytic.emplace(key, std::move(a)).first->second;
  }
};

}  // namespace

FeatureVector extract(const SignalWindow& w, const FirBank& bank,
                      std::span<const FeatureSpec> specs) {
  if (specs.size() > kMaxChannels)
    throw std::invalid_argument("more than 64 feature specs requested");
  FeatureVector fv;
  fv.specs.assign(specs.begin(), specs.end());
  fv.values.reserve(specs.size());
  ExtractCache cache{w, bank, {}};
  for (const auto& spec : specs) {
    spec.validate();
    switch (spec.kind) {
      case FeatureKind::LL:
        fv.values.push_back(line_length(w, spec.channel));
        break;
      case FeatureKind::ACT:
        fv.values.push_back(hjorth_activity(w, spec.channel));
        break;
      case FeatureKind::MOB:
        fv.values.push_back(hjorth_mobility(w, spec.channel).value);
        break;
      case FeatureKind::COM:
        fv.values.push_back(hjorth_complexity(w, spec.channel).value);
        break;
      case FeatureKind::LMP:
        fv.values.push_back(lmp(w, spec.channel));
        break;
      case FeatureKind::SE:
        fv.values.push_back(spectral_energy(w, bank, spec.band, spec.channel));
        break;
      case FeatureKind::HFO_RATIO:
        fv.values.push_back(hfo_ratio(w, bank, spec.channel, spec.band, spec.band2).value);
        break;
      case FeatureKind::PLV: {
        const auto& a = cache.get_analytic(spec.channel, spec.band);
        const auto& b = cache.get_analytic(*spec.channel2, spec.band);
        fv.values.push_back(plv(a, b));
        break;
      }
      case FeatureKind::PAC: {
        const auto& lo = cache.get_analytic(spec.channel, spec.band);
        const auto& hi = cache.get_analytic(spec.channel, spec.band2);
        fv.values.push_back(pac(lo, hi));
        break;
      }
    }
  }
  return fv;
}

}  // namespace nt
