#pragma once

#include <span>
#include <string>
#include <vector>

#include "nt/features.hpp"

namespace nt::oracle {

// Double-precision evaluation of the exact (unapproximated) biomarker
// formulas: variance-form Hjorth parameters, squared-energy SE/HFO, true
// sin/cos/sqrt phase math. Band decomposition uses the unquantized float
// taps of the same filter topology. Throws where a required variance is
// zero.
double ideal_feature(const std::vector<std::vector<double>>& channels, double sample_rate_hz,
                     const FeatureSpec& spec, const FirBank& bank);

// Convenience overload on a fixed-point window (samples converted exactly).
double ideal_feature(const SignalWindow& w, const FeatureSpec& spec, const FirBank& bank);

// Pearson correlation coefficient; requires length >= 2 and nonzero variance.
double correlate(std::span<const double> a, std::span<const double> b);

struct CorrelationReport {
  struct Entry {
    FeatureKind kind;
    double r = 0;
    size_t n = 0;
  };
  std::vector<Entry> per_kind;
  double median_r = 0;
  size_t window_count = 0;
};

// Fixed-point approximation vs ideal formula across seeded surrogate
// windows, one correlation per feature kind.
CorrelationReport validate_approximations(uint64_t seed, size_t n_windows);

void write_csv(const CorrelationReport& rep, const std::string& path, uint64_t seed);

}  // namespace nt::oracle
