#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "l96/ou.hpp"
#include "l96/stats.hpp"

using namespace l96;

namespace {

SampleSeries scalar_series(const std::vector<double>& v, double dt) {
  SampleSeries s;
  s.dim = 1;
  s.dt_sample = dt;
  s.data = v;
  return s;
}

}  // namespace

TEST_CASE("histogram_pdf: all samples in one bin") {
  std::vector<double> samples(50, 0.42);
  Histogram h = histogram_pdf(samples, 0.0, 1.0, 10);
  const double w = h.bin_width();
  CHECK(h.density[4] == doctest::Approx(1.0 / w));
  for (int b = 0; b < 10; ++b)
    if (b != 4) CHECK(h.density[static_cast<std::size_t>(b)] == 0.0);
}

TEST_CASE("histogram_pdf: in-range mass integrates to one") {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> d(0.0, 1.3);
  std::vector<double> samples(20000);
  for (auto& v : samples) v = d(gen);
  Histogram h = histogram_pdf(samples, -3.0, 3.0, 120);
  double mass = 0.0;
  for (double rho : h.density) mass += rho * h.bin_width();
  CHECK(std::abs(mass - 1.0) <= 1e-12);
  CHECK(h.n_below + h.n_above > 0);  // a 1.3-sigma normal spills past +-3
  CHECK(h.n_in + h.n_below + h.n_above == static_cast<long long>(samples.size()));
}

TEST_CASE("histogram_pdf: million-sample normal matches the analytic density") {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> samples(1000000);
  for (auto& v : samples) v = d(gen);
  Histogram h = histogram_pdf(samples, -5.0, 5.0, 200);

  Histogram analytic = h;
  for (int b = 0; b < h.n_bins; ++b) {
    const double c = h.bin_center(b);
    analytic.density[static_cast<std::size_t>(b)] =
        std::exp(-0.5 * c * c) / std::sqrt(2.0 * std::numbers::pi);
  }
  CHECK(l2_distance(h, analytic) < 0.01);
}

TEST_CASE("histogram_pdf: error cases") {
  std::vector<double> far(10, 100.0);
  CHECK_THROWS_AS(histogram_pdf(far, 0.0, 1.0, 4), EmptyInputError);
  std::vector<double> ok(10, 0.5);
  CHECK_THROWS_AS(histogram_pdf(ok, 0.0, 1.0, 0), Error);
  CHECK_THROWS_AS(histogram_pdf(ok, 1.0, 0.0, 4), Error);
}

TEST_CASE("autocorrelation: starts at exactly one") {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(5000);
  for (auto& x : v) x = d(gen);
  LagCurve c = autocorrelation(scalar_series(v, 0.05), 5.0);
  CHECK(c.values[0] == 1.0);
  CHECK(c.dt_lag == 0.05);
}

TEST_CASE("autocorrelation: sine wave gives cos(omega s)") {
  const double omega = 2.0, dt = 0.01;
  std::vector<double> v(60000);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = std::sin(omega * dt * static_cast<double>(k));
  LagCurve c = autocorrelation(scalar_series(v, dt), 3.0);
  for (std::size_t m = 0; m < c.values.size(); m += 25) {
    const double s = static_cast<double>(m) * dt;
    CHECK(std::abs(c.values[m] - std::cos(omega * s)) < 0.02);
  }
}

TEST_CASE("autocorrelation: white noise stays near zero past lag zero") {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> d(0.0, 2.0);
  std::vector<double> v(40000);
  for (auto& x : v) x = d(gen);
  LagCurve c = autocorrelation(scalar_series(v, 0.1), 2.0);
  const double bound = 5.0 / std::sqrt(static_cast<double>(v.size()));
  for (std::size_t m = 1; m < c.values.size(); ++m) CHECK(std::abs(c.values[m]) < bound);
}

TEST_CASE("autocorrelation: series shorter than the window throws") {
  CHECK_THROWS_AS(autocorrelation(scalar_series(std::vector<double>(10, 1.0), 0.1), 2.0),
                  InsufficientDataError);
}

TEST_CASE("cross_correlation: identical index series reduce to the autocorrelation") {
  std::mt19937_64 gen(9);
  std::normal_distribution<double> d(0.0, 1.0);
  SampleSeries s;
  s.dim = 3;
  s.dt_sample = 0.05;
  for (int k = 0; k < 4000; ++k) {
    const double v = d(gen);
    Vector row = Vector::Constant(3, v);
    s.push(row);
  }
  LagCurve ac = autocorrelation(s, 2.0);
  LagCurve cc = cross_correlation(s, 2.0);
  REQUIRE(ac.values.size() == cc.values.size());
  for (std::size_t m = 0; m < ac.values.size(); ++m)
    CHECK(cc.values[m] == doctest::Approx(ac.values[m]).epsilon(1e-12));
}

TEST_CASE("cross_correlation: scaled pair pins the shared variance divisor") {
  // x_1 = 2 x_0: pooled <x^2> = 2.5 <w^2>, pooled cross moment = 2 <w^2>,
  // so the lag-zero value must be 0.8 = 2ab/(a^2+b^2)
  std::mt19937_64 gen(11);
  std::normal_distribution<double> d(0.0, 1.0);
  SampleSeries s;
  s.dim = 2;
  s.dt_sample = 0.1;
  for (int k = 0; k < 30000; ++k) {
    const double w = d(gen);
    Vector row(2);
    row << w, 2.0 * w;
    s.push(row);
  }
  LagCurve cc = cross_correlation(s, 1.0);
  CHECK(cc.values[0] == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("cross_correlation: independent index series stay near zero") {
  std::mt19937_64 gen(13);
  std::normal_distribution<double> d(0.0, 1.0);
  SampleSeries s;
  s.dim = 2;
  s.dt_sample = 0.1;
  for (int k = 0; k < 40000; ++k) {
    Vector row(2);
    row << d(gen), d(gen);
    s.push(row);
  }
  LagCurve cc = cross_correlation(s, 2.0);
  const double bound = 5.0 / std::sqrt(40000.0);
  for (double v : cc.values) CHECK(std::abs(v) < bound);
}

TEST_CASE("energy_autocorrelation: constant series gives exactly one third") {
  LagCurve k = energy_autocorrelation(scalar_series(std::vector<double>(2000, 2.0), 0.1), 5.0);
  for (double v : k.values) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("energy_autocorrelation: Gaussian OU path stays near one") {
  OUSpec spec;
  spec.gamma = Matrix::Identity(1, 1);
  spec.m = Vector::Zero(1);
  spec.sigma_noise = Matrix::Constant(1, 1, std::sqrt(2.0));  // unit stationary variance
  spec.dt = 1e-3;
  spec.seed = 17;
  SampleSeries s = ou_simulate(spec, IntegrationPlan{1e-3, 20.0, 20000.0, 50, 0});
  LagCurve k = energy_autocorrelation(s, 20.0);
  for (double v : k.values) {
    CHECK(v > 0.9);
    CHECK(v < 1.1);
  }
}

TEST_CASE("diagnostics are invariant under cyclic index relabeling") {
  std::mt19937_64 gen(15);
  std::normal_distribution<double> d(0.0, 1.0);
  SampleSeries s;
  s.dim = 4;
  s.dt_sample = 0.05;
  std::vector<Vector> rows;
  for (int k = 0; k < 3000; ++k) {
    Vector row(4);
    for (int i = 0; i < 4; ++i) row[i] = d(gen) + 0.3 * i;  // deliberately index-skewed
    rows.push_back(row);
    s.push(row);
  }
  SampleSeries shifted;
  shifted.dim = 4;
  shifted.dt_sample = 0.05;
  for (const auto& row : rows) {
    Vector r2(4);
    for (int i = 0; i < 4; ++i) r2[(i + 1) % 4] = row[i];
    shifted.push(r2);
  }

  LagCurve a1 = autocorrelation(s, 1.0), a2 = autocorrelation(shifted, 1.0);
  LagCurve c1 = cross_correlation(s, 1.0), c2 = cross_correlation(shifted, 1.0);
  LagCurve k1 = energy_autocorrelation(s, 1.0), k2 = energy_autocorrelation(shifted, 1.0);
  for (std::size_t m = 0; m < a1.values.size(); ++m) {
    CHECK(a1.values[m] == doctest::Approx(a2.values[m]).epsilon(1e-12));
    CHECK(c1.values[m] == doctest::Approx(c2.values[m]).epsilon(1e-12));
    CHECK(k1.values[m] == doctest::Approx(k2.values[m]).epsilon(1e-12));
  }
}

TEST_CASE("l2_distance: identities, disjoint indicators, homogeneity, mismatches") {
  LagCurve a{0.1, {1.0, 0.5, 0.2}};
  CHECK(l2_distance(a, a) == 0.0);

  LagCurve twice{0.1, {2.0, 1.0, 0.4}};
  LagCurve zero{0.1, {0.0, 0.0, 0.0}};
  CHECK(l2_distance(twice, zero) == doctest::Approx(2.0 * l2_distance(a, zero)).epsilon(1e-15));

  LagCurve other_grid{0.2, {1.0, 0.5, 0.2}};
  CHECK_THROWS_AS(l2_distance(a, other_grid), GridMismatchError);

  std::vector<double> left(100, 0.25), right(100, 0.75);
  Histogram ha = histogram_pdf(left, 0.0, 1.0, 2);
  Histogram hb = histogram_pdf(right, 0.0, 1.0, 2);
  const double w = ha.bin_width();
  CHECK(l2_distance(ha, hb) == doctest::Approx(std::sqrt(2.0 / w)).epsilon(1e-14));

  Histogram hc = histogram_pdf(left, 0.0, 1.0, 4);
  CHECK_THROWS_AS(l2_distance(ha, hc), GridMismatchError);
}

TEST_CASE("curve and histogram csv round trips preserve values exactly") {
  namespace fs = std::filesystem;
  std::mt19937_64 gen(19);
  std::normal_distribution<double> d(0.0, 1.0);

  LagCurve c;
  c.dt_lag = 0.05;
  for (int k = 0; k < 64; ++k) c.values.push_back(d(gen));
  const auto cpath = fs::temp_directory_path() / "l96_curve_roundtrip.csv";
  write_curve_csv(c, cpath, "acf", "lam0.3_fx6_fy8", "full");
  LagCurve cr = read_curve_csv(cpath);
  fs::remove(cpath);
  REQUIRE(cr.values.size() == c.values.size());
  for (std::size_t k = 0; k < c.values.size(); ++k) CHECK(cr.values[k] == c.values[k]);

  std::vector<double> samples(5000);
  for (auto& v : samples) v = d(gen);
  Histogram h = histogram_pdf(samples, -4.0, 4.0, 64);
  const auto hpath = fs::temp_directory_path() / "l96_hist_roundtrip.csv";
  write_histogram_csv(h, hpath, "pdf", "lam0.3_fx6_fy8", "reduced");
  Histogram hr = read_histogram_csv(hpath);
  fs::remove(hpath);
  REQUIRE(hr.density.size() == h.density.size());
  for (std::size_t b = 0; b < h.density.size(); ++b) CHECK(hr.density[b] == h.density[b]);
}
