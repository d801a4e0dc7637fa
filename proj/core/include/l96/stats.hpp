#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "l96/integrator.hpp"

namespace l96 {

/// Bin-counting PDF estimate. In-range mass integrates to 1; out-of-range
/// samples are counted separately, never folded in.
struct Histogram {
  double lo = 0.0, hi = 0.0;
  int n_bins = 0;
  std::vector<double> density;
  long long n_in = 0, n_below = 0, n_above = 0;

  double bin_width() const { return (hi - lo) / n_bins; }
  double bin_center(int b) const { return lo + (b + 0.5) * bin_width(); }
  double out_of_range_fraction() const {
    long long total = n_in + n_below + n_above;
    return total > 0 ? static_cast<double>(n_below + n_above) / total : 0.0;
  }
};

/// A function of lag on the uniform grid 0, dt_lag, 2*dt_lag, ...
struct LagCurve {
  double dt_lag = 0.0;
  std::vector<double> values;
};

Histogram histogram_pdf(std::span<const double> samples, double lo, double hi, int n_bins);

// Correlation diagnostics over a slow-variable series, raw (uncentered)
// moments exactly as the formulas are written, time-averaged over the
// shared window [0, K), K = count - max-lag samples, and pooled over all
// indices. The normalization divisor for (b) and (c) is the pooled raw
// second moment <x_i^2>.

/// (b) C(s) = <x_i(t) x_i(t+s)> / <x_i^2>; starts at exactly 1.
LagCurve autocorrelation(const SampleSeries& series, double max_lag);

/// Same, for a single index (no pooling).
LagCurve autocorrelation_single(const SampleSeries& series, int index, double max_lag);

/// (c) <x_i(t) x_{i+1}(t+s)> / <x_i^2>, cyclic in i.
LagCurve cross_correlation(const SampleSeries& series, double max_lag);

/// (d) K(s) = <x_i^2(t) x_i^2(t+s)> / (<x_i^2>^2 + 2 <x_i(t) x_i(t+s)>^2);
/// identically 1 for a Gaussian process.
LagCurve energy_autocorrelation(const SampleSeries& series, double max_lag);

/// sqrt(sum (a_k - b_k)^2 * delta) with delta the bin width or lag spacing.
double l2_distance(const LagCurve& a, const LagCurve& b);
double l2_distance(const Histogram& a, const Histogram& b);

// CSV persistence: one header line naming diagnostic, regime and model
// variant, then (lag-or-bin-center, value) rows at 17 significant digits.
void write_curve_csv(const LagCurve& c, const std::filesystem::path& path,
                     const std::string& diagnostic, const std::string& regime,
                     const std::string& model);
LagCurve read_curve_csv(const std::filesystem::path& path);
void write_histogram_csv(const Histogram& h, const std::filesystem::path& path,
                         const std::string& diagnostic, const std::string& regime,
                         const std::string& model);
Histogram read_histogram_csv(const std::filesystem::path& path);

}  // namespace l96
