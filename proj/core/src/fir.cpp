#include "nt/fir.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace nt {

namespace {

constexpr double kPi = std::numbers::pi;

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  return std::sin(kPi * x) / (kPi * x);
}

std::vector<FixedPoint> quantize_taps(const std::vector<double>& taps) {
  std::vector<FixedPoint> q;
  q.reserve(taps.size());
  for (double t : taps) q.push_back(FixedPoint::from_value(t, qfmt::coeff));
  return q;
}

}  // namespace

double frequency_response_mag(const std::vector<double>& taps, double f_hz, double rate) {
  double re = 0, im = 0;
  for (size_t k = 0; k < taps.size(); ++k) {
    double w = 2.0 * kPi * f_hz * double(k) / rate;
    re += taps[k] * std::cos(w);
    im -= taps[k] * std::sin(w);
  }
  return std::hypot(re, im);
}

std::vector<double> design_bandpass_f64(double f_lo, double f_hi, double rate) {
  if (!(f_lo > 0) || !(f_hi > f_lo) || !(f_hi < rate / 2))
    throw std::invalid_argument("invalid band edges: need 0 < f_lo < f_hi < rate/2");

  const size_t n = kBandpassTaps;
  std::vector<double> h(n), w(n);
  const double center = (double(n) - 1.0) / 2.0;  // 15.5
  for (size_t k = 0; k < n; ++k) {
    double m = double(k) - center;
    w[k] = 0.54 - 0.46 * std::cos(2.0 * kPi * double(k) / (double(n) - 1.0));
    h[k] = (2.0 * f_hi / rate) * sinc(2.0 * f_hi * m / rate) -
           (2.0 * f_lo / rate) * sinc(2.0 * f_lo * m / rate);
    h[k] *= w[k];
  }

  // Force an exact zero at DC so low bands reject offsets; the short tap
  // count cannot otherwise resolve bands far below the transition width.
  double hsum = 0, wsum = 0;
  for (size_t k = 0; k < n; ++k) {
    hsum += h[k];
    wsum += w[k];
  }
  double c = hsum / wsum;
  for (size_t k = 0; k < n; ++k) h[k] -= c * w[k];

  // Normalize peak gain to 1 (evaluated on a fine grid).
  double peak = 0;
  const int grid = 2048;
  for (int i = 1; i < grid; ++i) {
    double f = rate / 2.0 * double(i) / double(grid);
    peak = std::max(peak, frequency_response_mag(h, f, rate));
  }
  if (peak <= 0) throw std::invalid_argument("degenerate bandpass design");
  double scale = 1.0 / peak;
  // keep taps inside the coefficient format
  double maxtap = 0;
  for (double t : h) maxtap = std::max(maxtap, std::abs(t) * scale);
  if (maxtap > 1.9) scale *= 1.9 / maxtap;
  for (size_t k = 0; k < n; ++k) h[k] *= scale;

  // enforce exact symmetry against accumulated float error
  for (size_t k = 0; k < n / 2; ++k) {
    double avg = 0.5 * (h[k] + h[n - 1 - k]);
    h[k] = avg;
    h[n - 1 - k] = avg;
  }
  return h;
}

std::vector<FixedPoint> design_bandpass(double f_lo, double f_hi, double rate) {
  return quantize_taps(design_bandpass_f64(f_lo, f_hi, rate));
}

std::vector<double> design_hilbert_f64() {
  const size_t n = kHilbertTaps;
  std::vector<double> h(n, 0.0);
  const int center = int(kHilbertDelay);
  for (size_t k = 0; k < n; ++k) {
    int m = int(k) - center;
    if (m % 2 == 0) continue;  // even taps exactly zero
    double w = 0.54 - 0.46 * std::cos(2.0 * kPi * double(k) / (double(n) - 1.0));
    h[k] = (2.0 / (kPi * double(m))) * w;
  }
  // exact antisymmetry
  for (size_t k = 0; k < n / 2; ++k) {
    double a = 0.5 * (h[k] - h[n - 1 - k]);
    h[k] = a;
    h[n - 1 - k] = -a;
  }
  return h;
}

std::vector<FixedPoint> design_hilbert() { return quantize_taps(design_hilbert_f64()); }

FirBank::FirBank(double rate) : sample_rate_hz_(rate) {
  if (rate <= 0) throw std::invalid_argument("sample rate must be positive");
  hilbert_f64_ = design_hilbert_f64();
  hilbert_q_ = quantize_taps(hilbert_f64_);
}

FirBank FirBank::default_bank(double rate) {
  FirBank bank(rate);
  struct Def {
    const char* name;
    double lo, hi;
  };
  static constexpr Def defs[] = {
      {"delta", 1, 4},     {"theta", 4, 8},     {"alpha", 8, 12},   {"beta", 12, 30},
      {"gamma", 30, 80},   {"ripple", 80, 150}, {"hfo1", 200, 300}, {"hfo2", 300, 400},
  };
  for (const auto& d : defs) {
    if (d.hi < rate / 2) bank.add_bandpass(d.name, d.lo, d.hi);
  }
  return bank;
}

void FirBank::add_bandpass(const std::string& name, double lo, double hi) {
  if (name == "hilbert") throw std::invalid_argument("'hilbert' is a reserved band name");
  auto taps = design_bandpass_f64(lo, hi, sample_rate_hz_);
  if (!bands_.count(name)) order_.push_back(name);
  bands_[name] = Band{name, lo, hi};
  coeffs_f64_[name] = taps;
  coeffs_[name] = quantize_taps(taps);
}

bool FirBank::has_band(const std::string& name) const { return bands_.count(name) != 0; }

const std::vector<FixedPoint>& FirBank::coeffs(const std::string& band) const {
  auto it = coeffs_.find(band);
  if (it == coeffs_.end()) throw std::invalid_argument("unknown band: " + band);
  return it->second;
}

const std::vector<double>& FirBank::coeffs_f64(const std::string& band) const {
  auto it = coeffs_f64_.find(band);
  if (it == coeffs_f64_.end()) throw std::invalid_argument("unknown band: " + band);
  return it->second;
}

const Band& FirBank::band(const std::string& name) const {
  auto it = bands_.find(name);
  if (it == bands_.end()) throw std::invalid_argument("unknown band: " + name);
  return it->second;
}

std::vector<Band> FirBank::bands() const {
  std::vector<Band> out;
  for (const auto& name : order_) out.push_back(bands_.at(name));
  return out;
}

void FirBank::export_csv(std::ostream& os) const {
  for (const auto& name : order_) {
    const auto& b = bands_.at(name);
    os << name << ',' << b.lo_hz << ',' << b.hi_hz;
    for (const auto& c : coeffs_.at(name)) os << ',' << c.raw;
    os << '\n';
  }
  os << "hilbert,0,0";
  for (const auto& c : hilbert_q_) os << ',' << c.raw;
  os << '\n';
}

FirBank FirBank::import_csv(std::istream& is, double rate) {
  FirBank bank(rate);
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() < 4)
      throw std::runtime_error("coefficient csv line " + std::to_string(lineno) + ": too few fields");
    const std::string& name = fields[0];
    size_t ntaps = fields.size() - 3;
    std::vector<FixedPoint> taps;
    std::vector<double> taps64;
    taps.reserve(ntaps);
    for (size_t i = 3; i < fields.size(); ++i) {
      int64_t raw = std::stoll(fields[i]);
      FixedPoint c{saturate_raw(raw, qfmt::coeff), qfmt::coeff};
      taps.push_back(c);
      taps64.push_back(c.value());
    }
    if (name == "hilbert") {
      if (ntaps != kHilbertTaps)
        throw std::runtime_error("hilbert row must have 31 taps");
      bank.hilbert_q_ = taps;
      bank.hilbert_f64_ = taps64;
    } else {
      if (ntaps != kBandpassTaps)
        throw std::runtime_error("band row must have 32 taps");
      if (!bank.bands_.count(name)) bank.order_.push_back(name);
      bank.bands_[name] = Band{name, std::stod(fields[1]), std::stod(fields[2])};
      bank.coeffs_[name] = taps;
      bank.coeffs_f64_[name] = taps64;
    }
  }
  return bank;
}

// Fixed-point convolution with zero initial state. Products carry
// coeff_frac + in_frac fraction bits and are accumulated exactly in 64 bit,
// then rounded once per output sample.
static void convolve_fixed(const std::vector<int32_t>& x, QFormat in_fmt,
                           const std::vector<FixedPoint>& taps, QFormat out_fmt,
                           std::vector<int32_t>& out) {
  const size_t n = x.size();
  const size_t nt = taps.size();
  out.resize(n);
  int shift = int(qfmt::coeff.fraction_bits) + int(in_fmt.fraction_bits) -
              int(out_fmt.fraction_bits);
  for (size_t t = 0; t < n; ++t) {
    int64_t acc = 0;
    size_t kmax = std::min(nt, t + 1);
    for (size_t k = 0; k < kmax; ++k) acc += taps[k].raw * int64_t(x[t - k]);
    int64_t r = shift_round(__int128(acc), shift);
    out[t] = int32_t(saturate_raw(r, out_fmt));
  }
}

SignalWindow filter_window(const SignalWindow& w, const FirBank& bank, const std::string& band) {
  const auto& taps = bank.coeffs(band);  // throws on unknown band
  if (w.sample_rate_hz != bank.sample_rate_hz())
    throw std::invalid_argument("window sample rate does not match coefficient bank");
  SignalWindow out;
  out.channel_ids = w.channel_ids;
  out.sample_rate_hz = w.sample_rate_hz;
  out.fmt = qfmt::filtered;
  out.samples.resize(w.samples.size());
  for (size_t c = 0; c < w.samples.size(); ++c)
    convolve_fixed(w.samples[c], w.fmt, taps, out.fmt, out.samples[c]);
  return out;
}

AnalyticSignal hilbert_window(const SignalWindow& w, uint32_t channel_id, const FirBank& bank,
                              size_t extra_warmup) {
  if (w.length() <= kHilbertTaps) throw std::invalid_argument("window too short for Hilbert");
  size_t ci = w.channel_index(channel_id);
  AnalyticSignal a;
  a.fmt = qfmt::filtered;
  a.sample_rate_hz = w.sample_rate_hz;
  a.valid_from = kHilbertTaps + extra_warmup;

  std::vector<int32_t> im;
  convolve_fixed(w.samples[ci], w.fmt, bank.hilbert_coeffs(), a.fmt, im);
  a.im_raw = std::move(im);

  // re: input delayed by the group delay, rescaled to the output format
  const auto& x = w.samples[ci];
  a.re_raw.resize(x.size(), 0);
  int shift = int(w.fmt.fraction_bits) - int(a.fmt.fraction_bits);
  for (size_t t = kHilbertDelay; t < x.size(); ++t) {
    int64_t r = shift_round(__int128(x[t - kHilbertDelay]), shift);
    a.re_raw[t] = int32_t(saturate_raw(r, a.fmt));
  }
  return a;
}

std::vector<double> convolve_reset_f64(const std::vector<double>& x,
                                       const std::vector<double>& taps) {
  std::vector<double> out(x.size(), 0.0);
  for (size_t t = 0; t < x.size(); ++t) {
    double acc = 0;
    size_t kmax = std::min(taps.size(), t + 1);
    for (size_t k = 0; k < kmax; ++k) acc += taps[k] * x[t - k];
    out[t] = acc;
  }
  return out;
}

}  // namespace nt
