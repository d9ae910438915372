#include "nt/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "nt/csv.hpp"
#include "nt/surrogate.hpp"

namespace nt::oracle {

namespace {

double mean(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / double(x.size());
}

double variance(std::span<const double> x) {
  double mu = mean(x);
  double acc = 0;
  for (double v : x) acc += (v - mu) * (v - mu);
  return acc / double(x.size());
}

std::vector<double> diff(std::span<const double> x) {
  std::vector<double> d;
  d.reserve(x.size() > 0 ? x.size() - 1 : 0);
  for (size_t t = 1; t < x.size(); ++t) d.push_back(x[t] - x[t - 1]);
  return d;
}

constexpr size_t kFilterWarmup = 31;
constexpr size_t kHilbDelay = kHilbertDelay;

struct FloatAnalytic {
  std::vector<double> re, im;
  size_t valid_from;
};

FloatAnalytic float_analytic(const std::vector<double>& x, const FirBank& bank,
                             const std::string& band) {
  auto y = convolve_reset_f64(x, bank.coeffs_f64(band));
  auto im = convolve_reset_f64(y, bank.hilbert_coeffs_f64());
  FloatAnalytic a;
  a.im = std::move(im);
  a.re.assign(y.size(), 0.0);
  for (size_t t = kHilbDelay; t < y.size(); ++t) a.re[t] = y[t - kHilbDelay];
  a.valid_from = kFilterWarmup + kHilbertTaps;
  return a;
}

double ideal_se(const std::vector<double>& x, const FirBank& bank, const std::string& band) {
  auto y = convolve_reset_f64(x, bank.coeffs_f64(band));
  size_t skip = y.size() > kFilterWarmup ? kFilterWarmup : 0;
  double acc = 0;
  for (size_t t = skip; t < y.size(); ++t) acc += y[t] * y[t];
  return acc / double(y.size());
}

}  // namespace

double ideal_feature(const std::vector<std::vector<double>>& channels, double /*rate*/,
                     const FeatureSpec& spec, const FirBank& bank) {
  spec.validate();
  if (spec.channel >= channels.size())
    throw std::invalid_argument("ideal_feature: channel out of range");
  const auto& x = channels[spec.channel];
  switch (spec.kind) {
    case FeatureKind::LL: {
      if (x.size() < 2) throw std::invalid_argument("LL needs >= 2 samples");
      auto d = diff(x);
      double acc = 0;
      for (double v : d) acc += std::abs(v);
      return acc / double(x.size());
    }
    case FeatureKind::ACT:
      return variance(x);
    case FeatureKind::MOB: {
      double vx = variance(x);
      if (vx == 0) throw std::invalid_argument("MOB: zero variance");
      return std::sqrt(variance(diff(x)) / vx);
    }
    case FeatureKind::COM: {
      auto dx = diff(x);
      double vdx = variance(dx);
      if (vdx == 0) throw std::invalid_argument("COM: zero first-difference variance");
      return std::sqrt(variance(x) * variance(diff(dx))) / vdx;
    }
    case FeatureKind::LMP:
      return mean(x);
    case FeatureKind::SE:
      return ideal_se(x, bank, spec.band);
    case FeatureKind::HFO_RATIO: {
      auto y1 = convolve_reset_f64(x, bank.coeffs_f64(spec.band));
      auto y2 = convolve_reset_f64(x, bank.coeffs_f64(spec.band2));
      size_t skip = y1.size() > kFilterWarmup ? kFilterWarmup : 0;
      double n = 0, d = 0;
      for (size_t t = skip; t < y1.size(); ++t) {
        n += y1[t] * y1[t];
        d += y2[t] * y2[t];
      }
      if (d == 0) throw std::invalid_argument("HFO_RATIO: zero fast-band energy");
      return n / d;
    }
    case FeatureKind::PLV: {
      if (!spec.channel2 || *spec.channel2 >= channels.size())
        throw std::invalid_argument("PLV: bad second channel");
      auto a = float_analytic(x, bank, spec.band);
      auto b = float_analytic(channels[*spec.channel2], bank, spec.band);
      double s = 0, c = 0;
      size_t from = a.valid_from, count = 0;
      for (size_t t = from; t < a.re.size(); ++t) {
        double dt = std::atan2(a.im[t], a.re[t]) - std::atan2(b.im[t], b.re[t]);
        s += std::sin(dt);
        c += std::cos(dt);
        ++count;
      }
      if (count == 0) throw std::invalid_argument("PLV: window shorter than warm-up");
      return std::hypot(s, c) / double(count);
    }
    case FeatureKind::PAC: {
      auto lo = float_analytic(x, bank, spec.band);
      auto hi = float_analytic(x, bank, spec.band2);
      double s = 0, c = 0;
      size_t from = lo.valid_from, count = 0;
      for (size_t t = from; t < lo.re.size(); ++t) {
        double theta = std::atan2(lo.im[t], lo.re[t]);
        double amp = std::hypot(hi.re[t], hi.im[t]);
        s += amp * std::sin(theta);
        c += amp * std::cos(theta);
        ++count;
      }
      if (count == 0) throw std::invalid_argument("PAC: window shorter than warm-up");
      return std::hypot(s, c) / double(count);
    }
  }
  throw std::logic_error("unreachable");
}

double ideal_feature(const SignalWindow& w, const FeatureSpec& spec, const FirBank& bank) {
  std::vector<std::vector<double>> channels(w.samples.size());
  for (size_t c = 0; c < w.samples.size(); ++c) {
    channels[c].reserve(w.length());
    for (int32_t v : w.samples[c]) channels[c].push_back(FixedPoint{v, w.fmt}.value());
  }
  // spec channel ids index the window's channel list
  FeatureSpec local = spec;
  local.channel = uint32_t(w.channel_index(spec.channel));
  if (spec.channel2) local.channel2 = uint32_t(w.channel_index(*spec.channel2));
  return ideal_feature(channels, w.sample_rate_hz, local, bank);
}

double correlate(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("correlate: length mismatch");
  if (a.size() < 2) throw std::invalid_argument("correlate: need at least 2 samples");
  double ma = mean(a), mb = mean(b);
  double sab = 0, saa = 0, sbb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0 || sbb == 0) throw std::invalid_argument("correlate: zero variance");
  return sab / std::sqrt(saa * sbb);
}

CorrelationReport validate_approximations(uint64_t seed, size_t n_windows) {
  const double rate = 2000.0;
  FirBank bank = FirBank::default_bank(rate);

  const std::vector<FeatureSpec> specs = {
      parse_feature_spec("LL:0"),
      parse_feature_spec("ACT:3"),
      parse_feature_spec("MOB:0"),
      parse_feature_spec("COM:0"),
      parse_feature_spec("LMP:2"),
      parse_feature_spec("SE:0:theta"),
      parse_feature_spec("HFO_RATIO:0:hfo1,hfo2"),
      parse_feature_spec("PLV:0,1:theta"),
      parse_feature_spec("PAC:0:theta,ripple"),
  };

  std::vector<std::vector<double>> approx(specs.size()), ideal(specs.size());
  for (size_t wi = 0; wi < n_windows; ++wi) {
    SignalWindow w = surrogate::validation_window(seed, wi, rate, 2000);
    FeatureVector fv = extract(w, bank, specs);
    for (size_t s = 0; s < specs.size(); ++s) {
      approx[s].push_back(fv.values[s].value());
      ideal[s].push_back(ideal_feature(w, specs[s], bank));
    }
  }

  CorrelationReport rep;
  rep.window_count = n_windows;
  std::vector<double> rs;
  for (size_t s = 0; s < specs.size(); ++s) {
    double r = correlate(approx[s], ideal[s]);
    rep.per_kind.push_back({specs[s].kind, r, n_windows});
    rs.push_back(r);
  }
  std::sort(rs.begin(), rs.end());
  size_t m = rs.size();
  rep.median_r = (m % 2 == 1) ? rs[m / 2] : 0.5 * (rs[m / 2 - 1] + rs[m / 2]);
  return rep;
}

void write_csv(const CorrelationReport& rep, const std::string& path, uint64_t seed) {
  CsvWriter csv(path);
  csv.comment_line(seed);
  csv.header({"kind", "pearson_r", "windows"});
  for (const auto& e : rep.per_kind) {
    csv.field(std::string(to_string(e.kind)));
    csv.field(e.r);
    csv.field(e.n);
    csv.end_row();
  }
  csv.field(std::string("median"));
  csv.field(rep.median_r);
  csv.field(rep.window_count);
  csv.end_row();
}

}  // namespace nt::oracle
