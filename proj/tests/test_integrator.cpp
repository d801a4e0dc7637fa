#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "l96/integrator.hpp"

using namespace l96;

namespace {

auto zero_rhs = [](const Vector&, Vector& d) { d.setZero(); };
auto decay_rhs = [](const Vector& x, Vector& d) { d = -x; };

}  // namespace

TEST_CASE("rk4_step: zero field leaves the state unchanged") {
  Vector s = perturbed_state(5, 1.0, 2.0, 1);
  Vector out = rk4_step(zero_rhs, s, 0.3);
  CHECK((out - s).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("rk4_step: constant field advances by c*dt") {
  Vector c = perturbed_state(4, 0.0, 3.0, 2);
  auto rhs = [&](const Vector&, Vector& d) { d = c; };
  Vector s = Vector::Zero(4);
  Vector out = rk4_step(rhs, s, 0.25);
  CHECK((out - 0.25 * c).lpNorm<Eigen::Infinity>() <= 1e-15);
}

TEST_CASE("rk4_step: linear decay reproduces the degree-4 stability polynomial") {
  const double h = 0.2, x0 = 1.7;
  Vector s = Vector::Constant(1, x0);
  Vector out = rk4_step(decay_rhs, s, h);
  const double expect = x0 * (1.0 - h + h * h / 2.0 - h * h * h / 6.0 + h * h * h * h / 24.0);
  CHECK(out[0] == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("rk4_step: rejects nonpositive dt and catches non-finite output") {
  Vector s = Vector::Ones(2);
  CHECK_THROWS_AS(rk4_step(decay_rhs, s, 0.0), Error);
  auto nan_rhs = [](const Vector&, Vector& d) { d.setConstant(std::nan("")); };
  CHECK_THROWS_AS(rk4_step(nan_rhs, s, 0.1), BlowUpError);
}

TEST_CASE("integrate_sampled: constant field gives all-equal samples") {
  Vector s0 = perturbed_state(3, 0.5, 0.1, 3);
  IntegrationPlan plan{0.01, 0.0, 1.0, 10, 0};
  SampleSeries out = integrate_sampled(zero_rhs, s0, plan);
  CHECK(out.count() == 11);
  CHECK(out.dt_sample == doctest::Approx(0.1));
  for (long long k = 0; k < out.count(); ++k)
    CHECK((out.sample(k) - s0).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("integrate_sampled: zero duration yields an empty series") {
  IntegrationPlan plan{0.01, 0.5, 0.0, 1, 0};
  SampleSeries out = integrate_sampled(zero_rhs, Vector::Ones(2), plan);
  CHECK(out.count() == 0);
}

TEST_CASE("integrate_sampled: sample count follows the floor formula") {
  IntegrationPlan plan{0.01, 0.0, 0.999, 10, 0};
  SampleSeries out = integrate_sampled(zero_rhs, Vector::Ones(1), plan);
  CHECK(out.count() == 10);  // floor(0.999/0.1) + 1
  plan.duration = 1.0;
  CHECK(integrate_sampled(zero_rhs, Vector::Ones(1), plan).count() == 11);
}

TEST_CASE("integrate_observe: exponential decay matches e^{-1} to 1e-9") {
  Vector s0 = Vector::Constant(1, 1.0);
  IntegrationPlan plan{0.01, 0.0, 1.0, 100, 0};
  double last = 0.0;
  integrate_observe(decay_rhs, s0, plan, [&](double, const Vector& s) { last = s[0]; });
  CHECK(std::abs(last - std::exp(-1.0)) / std::exp(-1.0) < 1e-9);
}

TEST_CASE("integrate_observe: measured convergence order is four") {
  auto err_at = [&](double h) {
    Vector s = Vector::Constant(1, 1.0);
    IntegrationPlan plan{h, 0.0, 1.0, static_cast<int>(std::llround(1.0 / h)), 0};
    double last = 0.0;
    integrate_observe(decay_rhs, s, plan, [&](double, const Vector& v) { last = v[0]; });
    return std::abs(last - std::exp(-1.0));
  };
  const double order = std::log2(err_at(0.1) / err_at(0.05));
  CHECK(order > 3.5);
  CHECK(order < 4.5);
}

TEST_CASE("integrate_observe: deterministic replay is bit identical") {
  UncoupledL96 sys(8, 8.0);
  Vector s0 = perturbed_state(8, 8.0, 0.5, 77);
  IntegrationPlan plan{5e-3, 1.0, 5.0, 10, 0};
  SampleSeries a = integrate_sampled(sys, s0, plan);
  SampleSeries b = integrate_sampled(sys, s0, plan);
  REQUIRE(a.data.size() == b.data.size());
  CHECK(std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0);
}

TEST_CASE("integrate_observe: blow-up carries the failure time") {
  auto quad = [](const Vector& x, Vector& d) { d = x.array().square().matrix(); };
  Vector s0 = Vector::Constant(1, 10.0);
  IntegrationPlan plan{0.5, 0.0, 100.0, 1, 0};
  try {
    integrate_observe(quad, s0, plan, [](double, const Vector&) {});
    FAIL("expected BlowUpError");
  } catch (const BlowUpError& e) {
    CHECK(e.time > 0.0);
    CHECK(e.time <= 100.0);
  }
}

TEST_CASE("integrate_observe: rejects a non-finite initial state") {
  Vector bad = Vector::Constant(2, std::numeric_limits<double>::infinity());
  IntegrationPlan plan{0.1, 0.0, 1.0, 1, 0};
  CHECK_THROWS_AS(integrate_observe(zero_rhs, bad, plan, [](double, const Vector&) {}), Error);
}

TEST_CASE("perturbed_state: seeded, centered, and bounded") {
  Vector a = perturbed_state(100, 2.0, 0.5, 9);
  Vector b = perturbed_state(100, 2.0, 0.5, 9);
  Vector c = perturbed_state(100, 2.0, 0.5, 10);
  CHECK((a - b).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((a - c).lpNorm<Eigen::Infinity>() > 0.0);
  CHECK((a.array() - 2.0).abs().maxCoeff() <= 0.5);
}

TEST_CASE("split_seed: stage streams differ and are stable") {
  CHECK(split_seed(1, 1) != split_seed(1, 2));
  CHECK(split_seed(1, 1) != split_seed(2, 1));
  CHECK(split_seed(1, 1) == split_seed(1, 1));
}

TEST_CASE("SampleSeries: csv round trip preserves every sample") {
  UncoupledL96 sys(5, 7.0);
  Vector s0 = perturbed_state(5, 7.0, 0.5, 4);
  SampleSeries a = integrate_sampled(sys, s0, IntegrationPlan{1e-2, 0.1, 0.5, 5, 0});
  const auto path = std::filesystem::temp_directory_path() / "l96_series_roundtrip.csv";
  write_series_csv(a, path);
  SampleSeries b = read_series_csv(path);
  std::filesystem::remove(path);

  CHECK(b.dim == a.dim);
  CHECK(b.dt_sample == a.dt_sample);
  CHECK(b.t_start == a.t_start);
  REQUIRE(b.count() == a.count());
  CHECK(std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0);

  // one coordinate extracted contiguously
  auto col = a.component(2);
  for (long long k = 0; k < a.count(); ++k) CHECK(col[static_cast<std::size_t>(k)] == a.sample(k)[2]);
}
