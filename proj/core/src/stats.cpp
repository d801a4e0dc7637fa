#include "l96/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace l96 {

Histogram histogram_pdf(std::span<const double> samples, double lo, double hi, int n_bins) {
  if (n_bins < 1) throw Error("histogram_pdf: n_bins must be >= 1");
  if (!(hi > lo)) throw Error("histogram_pdf: need hi > lo");

  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.n_bins = n_bins;
  const double w = h.bin_width();
  std::vector<long long> counts(static_cast<std::size_t>(n_bins), 0);
  for (double v : samples) {
    if (v < lo) {
      ++h.n_below;
    } else if (v > hi) {
      ++h.n_above;
    } else {
      int b = std::min(n_bins - 1, static_cast<int>((v - lo) / w));
      ++counts[static_cast<std::size_t>(b)];
      ++h.n_in;
    }
  }
  if (h.n_in == 0) throw EmptyInputError("histogram_pdf: no in-range samples");
  h.density.resize(static_cast<std::size_t>(n_bins));
  const double norm = static_cast<double>(h.n_in) * w;
  for (int b = 0; b < n_bins; ++b) h.density[static_cast<std::size_t>(b)] = counts[b] / norm;
  return h;
}

namespace {

struct LagWindow {
  long long m_lags;  // number of nonzero lags
  long long window;  // shared tau-window length K
};

LagWindow lag_window(const SampleSeries& s, double max_lag) {
  if (!(s.dt_sample > 0.0)) throw Error("correlation: series dt_sample must be positive");
  if (!(max_lag >= 0.0)) throw Error("correlation: max_lag must be nonnegative");
  const long long m = static_cast<long long>(std::floor(max_lag / s.dt_sample + 1e-9));
  const long long k = s.count() - m;
  if (k < 1)
    throw InsufficientDataError("correlation: series duration does not exceed max_lag");
  return {m, k};
}

// Pooled raw lag moments sum_i sum_{tau<K} f(x_i(tau)) g(x_i(tau+m)) for
// f=g=identity and, when wanted, f=g=square. One contiguous pass per index.
struct RawLagMoments {
  std::vector<double> xx;    // per-lag pooled sums of x(tau) x(tau+m)
  std::vector<double> x2x2;  // same for squares (empty unless requested)
  long long terms_per_lag;   // n_indices * K
};

RawLagMoments raw_lag_moments(const SampleSeries& s, double max_lag, bool with_squares,
                              int only_index = -1, int partner_shift = 0) {
  const auto [m_lags, window] = lag_window(s, max_lag);
  const long long n = s.count();
  RawLagMoments out;
  out.xx.assign(static_cast<std::size_t>(m_lags) + 1, 0.0);
  if (with_squares) out.x2x2.assign(static_cast<std::size_t>(m_lags) + 1, 0.0);

  std::vector<double> a(static_cast<std::size_t>(n)), b, a2, b2;
  int pooled = 0;
  for (int i = 0; i < s.dim; ++i) {
    if (only_index >= 0 && i != only_index) continue;
    ++pooled;
    a = s.component(i);
    const double* left = a.data();
    const double* right = left;
    if (partner_shift != 0) {
      b = s.component((i + partner_shift) % s.dim);
      right = b.data();
    }
    for (long long m = 0; m <= m_lags; ++m) {
      out.xx[static_cast<std::size_t>(m)] +=
          Eigen::Map<const Vector>(left, window).dot(Eigen::Map<const Vector>(right + m, window));
    }
    if (with_squares) {
      a2.resize(a.size());
      std::transform(a.begin(), a.end(), a2.begin(), [](double v) { return v * v; });
      for (long long m = 0; m <= m_lags; ++m) {
        out.x2x2[static_cast<std::size_t>(m)] +=
            Eigen::Map<const Vector>(a2.data(), window)
                .dot(Eigen::Map<const Vector>(a2.data() + m, window));
      }
    }
  }
  out.terms_per_lag = static_cast<long long>(pooled) * window;
  return out;
}

LagCurve normalized_by_variance(const SampleSeries& s, double max_lag, int partner_shift,
                                int only_index) {
  RawLagMoments num = raw_lag_moments(s, max_lag, false, only_index, partner_shift);
  double divisor;
  if (partner_shift == 0) {
    divisor = num.xx[0];
  } else {
    // the divisor is <x_i^2>, the raw second moment of diagnostic (b)
    divisor = raw_lag_moments(s, max_lag, false, only_index, 0).xx[0];
  }
  if (!(divisor > 0.0)) throw EmptyInputError("correlation: zero second moment");
  LagCurve c;
  c.dt_lag = s.dt_sample;
  c.values.resize(num.xx.size());
  for (std::size_t m = 0; m < num.xx.size(); ++m) c.values[m] = num.xx[m] / divisor;
  return c;
}

}  // namespace

LagCurve autocorrelation(const SampleSeries& series, double max_lag) {
  return normalized_by_variance(series, max_lag, 0, -1);
}

LagCurve autocorrelation_single(const SampleSeries& series, int index, double max_lag) {
  if (index < 0 || index >= series.dim)
    throw DimensionError("autocorrelation_single: index out of range");
  return normalized_by_variance(series, max_lag, 0, index);
}

LagCurve cross_correlation(const SampleSeries& series, double max_lag) {
  return normalized_by_variance(series, max_lag, 1, -1);
}

LagCurve energy_autocorrelation(const SampleSeries& series, double max_lag) {
  RawLagMoments mom = raw_lag_moments(series, max_lag, true);
  const double cnt = static_cast<double>(mom.terms_per_lag);
  const double q = mom.xx[0] / cnt;  // <x^2>
  if (!(q > 0.0)) throw EmptyInputError("energy_autocorrelation: zero second moment");
  LagCurve c;
  c.dt_lag = series.dt_sample;
  c.values.resize(mom.xx.size());
  for (std::size_t m = 0; m < mom.xx.size(); ++m) {
    const double corr = mom.xx[m] / cnt;
    const double num = mom.x2x2[m] / cnt;
    c.values[m] = num / (q * q + 2.0 * corr * corr);
  }
  return c;
}

double l2_distance(const LagCurve& a, const LagCurve& b) {
  if (a.values.size() != b.values.size() || a.dt_lag != b.dt_lag)
    throw GridMismatchError("l2_distance: lag grids differ");
  double acc = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k) {
    const double d = a.values[k] - b.values[k];
    acc += d * d;
  }
  return std::sqrt(acc * a.dt_lag);
}

double l2_distance(const Histogram& a, const Histogram& b) {
  if (a.n_bins != b.n_bins || a.lo != b.lo || a.hi != b.hi)
    throw GridMismatchError("l2_distance: histogram grids differ");
  double acc = 0.0;
  for (int k = 0; k < a.n_bins; ++k) {
    const double d = a.density[static_cast<std::size_t>(k)] - b.density[static_cast<std::size_t>(k)];
    acc += d * d;
  }
  return std::sqrt(acc * a.bin_width());
}

namespace {

void write_xy_csv(const std::filesystem::path& path, const std::string& header,
                  const std::string& columns, const std::vector<double>& xs,
                  const std::vector<double>& ys) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw IoError("cannot open for writing: " + path.string());
  std::fprintf(f, "%s\n%s\n", header.c_str(), columns.c_str());
  for (std::size_t k = 0; k < xs.size(); ++k)
    std::fprintf(f, "%.17g,%.17g\n", xs[k], ys[k]);
  if (std::fclose(f) != 0) throw IoError("write failed: " + path.string());
}

std::pair<std::vector<double>, std::vector<double>> read_xy_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  std::string line;
  std::getline(in, line);  // header
  if (line.empty() || line[0] != '#') throw IoError("missing header in " + path.string());
  std::getline(in, line);  // column names
  std::vector<double> xs, ys;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw IoError("bad row in " + path.string());
    xs.push_back(std::strtod(line.substr(0, comma).c_str(), nullptr));
    ys.push_back(std::strtod(line.substr(comma + 1).c_str(), nullptr));
  }
  if (xs.empty()) throw IoError("no data rows in " + path.string());
  return {std::move(xs), std::move(ys)};
}

}  // namespace

void write_curve_csv(const LagCurve& c, const std::filesystem::path& path,
                     const std::string& diagnostic, const std::string& regime,
                     const std::string& model) {
  std::vector<double> lags(c.values.size());
  for (std::size_t k = 0; k < lags.size(); ++k) lags[k] = static_cast<double>(k) * c.dt_lag;
  write_xy_csv(path, "# " + diagnostic + " " + regime + " " + model, "lag,value", lags, c.values);
}

LagCurve read_curve_csv(const std::filesystem::path& path) {
  auto [xs, ys] = read_xy_csv(path);
  LagCurve c;
  c.dt_lag = xs.size() > 1 ? xs[1] - xs[0] : 0.0;
  c.values = std::move(ys);
  return c;
}

void write_histogram_csv(const Histogram& h, const std::filesystem::path& path,
                         const std::string& diagnostic, const std::string& regime,
                         const std::string& model) {
  std::vector<double> centers(h.density.size());
  for (std::size_t b = 0; b < centers.size(); ++b) centers[b] = h.bin_center(static_cast<int>(b));
  write_xy_csv(path, "# " + diagnostic + " " + regime + " " + model, "bin_center,density",
               centers, h.density);
}

Histogram read_histogram_csv(const std::filesystem::path& path) {
  auto [xs, ys] = read_xy_csv(path);
  Histogram h;
  h.n_bins = static_cast<int>(xs.size());
  const double w = h.n_bins > 1 ? xs[1] - xs[0] : 1.0;
  h.lo = xs.front() - 0.5 * w;
  h.hi = xs.back() + 0.5 * w;
  h.density = std::move(ys);
  return h;
}

}  // namespace l96
