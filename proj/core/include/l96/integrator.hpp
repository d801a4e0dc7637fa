#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "l96/errors.hpp"
#include "l96/model.hpp"

namespace l96 {

/// Uniformly sampled trajectory stream; the interchange format between
/// integrator, closure and stats. Storage is column-major: sample k occupies
/// data[k*dim .. (k+1)*dim).
struct SampleSeries {
  int dim = 0;
  double dt_sample = 0.0;
  double t_start = 0.0;
  std::vector<double> data;

  long long count() const { return dim > 0 ? static_cast<long long>(data.size()) / dim : 0; }

  void push(ConstRef v) {
    if (static_cast<int>(v.size()) != dim)
      throw DimensionError("SampleSeries::push: sample dimension mismatch");
    data.insert(data.end(), v.data(), v.data() + v.size());
  }

  Eigen::Map<const Vector> sample(long long k) const {
    return Eigen::Map<const Vector>(data.data() + k * dim, dim);
  }

  /// dim x count view of the whole series.
  Eigen::Map<const Matrix> matrix() const {
    return Eigen::Map<const Matrix>(data.data(), dim, count());
  }

  double time_at(long long k) const { return t_start + static_cast<double>(k) * dt_sample; }

  /// One coordinate as a contiguous time series.
  std::vector<double> component(int i) const;
};

struct IntegrationPlan {
  double dt = 5e-3;
  double spin_up = 0.0;
  double duration = 0.0;
  int sample_every = 1;
  std::uint64_t seed = 0;

  double dt_sample() const { return dt * sample_every; }
  long long spin_steps() const { return std::llround(spin_up / dt); }
  long long sample_count() const {
    if (duration <= 0.0) return 0;  // explicit boundary case: empty series
    return static_cast<long long>(std::floor(duration / dt_sample() + 1e-9)) + 1;
  }
  void validate() const {
    if (dt <= 0.0) throw Error("IntegrationPlan: dt must be positive");
    if (duration < 0.0) throw Error("IntegrationPlan: duration must be nonnegative");
    if (sample_every < 1) throw Error("IntegrationPlan: sample_every must be >= 1");
    if (spin_up < 0.0) throw Error("IntegrationPlan: spin_up must be nonnegative");
  }
};

/// Classical fixed-step RK4 with preallocated stage storage.
template <class Rhs>
class Rk4Stepper {
 public:
  explicit Rk4Stepper(Eigen::Index dim) : k1_(dim), k2_(dim), k3_(dim), k4_(dim), mid_(dim) {}

  void step(Rhs& rhs, Vector& s, double dt) {
    rhs(s, k1_);
    mid_ = s + (0.5 * dt) * k1_;
    rhs(mid_, k2_);
    mid_ = s + (0.5 * dt) * k2_;
    rhs(mid_, k3_);
    mid_ = s + dt * k3_;
    rhs(mid_, k4_);
    s += (dt / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
  }

 private:
  Vector k1_, k2_, k3_, k4_, mid_;
};

/// Single RK4 update s + (dt/6)(k1 + 2 k2 + 2 k3 + k4). Throws BlowUpError
/// if the updated state is non-finite.
template <class Rhs>
Vector rk4_step(Rhs&& rhs, const Vector& s, double dt) {
  if (dt <= 0.0) throw Error("rk4_step: dt must be positive");
  Vector out = s;
  Rk4Stepper<std::decay_t<Rhs>> stepper(s.size());
  stepper.step(rhs, out, dt);
  if (!out.allFinite()) throw BlowUpError("rk4_step: non-finite state", dt);
  return out;
}

/// Advances rhs from s0 with fixed-step RK4, discards the spin-up, then
/// invokes observe(t, state) for every sample_every-th step, starting with
/// the first post-spin-up state. Streaming form: nothing is stored.
template <class Rhs, class Observer>
void integrate_observe(Rhs&& rhs, const Vector& s0, const IntegrationPlan& plan,
                       Observer&& observe) {
  plan.validate();
  if (!s0.allFinite()) throw Error("integrate: non-finite initial state");

  Vector s = s0;
  Rk4Stepper<std::decay_t<Rhs>> stepper(s.size());
  long long steps_done = 0;
  auto advance = [&](long long k) {
    for (long long q = 0; q < k; ++q) {
      stepper.step(rhs, s, plan.dt);
      ++steps_done;
      if (!s.allFinite())
        throw BlowUpError("trajectory blew up", static_cast<double>(steps_done) * plan.dt);
    }
  };

  advance(plan.spin_steps());
  const long long n_samples = plan.sample_count();
  for (long long k = 0; k < n_samples; ++k) {
    if (k > 0) advance(plan.sample_every);
    observe(plan.spin_up + static_cast<double>(k) * plan.dt_sample(), s);
  }
}

/// Collector form of integrate_observe; sample count is
/// floor(duration / (dt*sample_every)) + 1 for duration > 0, else 0.
template <class Rhs>
SampleSeries integrate_sampled(Rhs&& rhs, const Vector& s0, const IntegrationPlan& plan) {
  SampleSeries out;
  out.dim = static_cast<int>(s0.size());
  out.dt_sample = plan.dt_sample();
  out.t_start = plan.spin_up;
  out.data.reserve(static_cast<std::size_t>(plan.sample_count()) * s0.size());
  integrate_observe(std::forward<Rhs>(rhs), s0, plan,
                    [&](double, const Vector& s) { out.push(s); });
  return out;
}

/// splitmix64; used to derive decorrelated per-stage seeds from one master.
std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream);

/// center + uniform[-amplitude, amplitude] componentwise, seeded.
Vector perturbed_state(int dim, double center, double amplitude, std::uint64_t seed);

// Trajectory file format: two metadata lines then row-per-sample.
//   dim,dt_sample,t_start,count
//   <values>
//   t,v0,v1,...
void write_series_csv(const SampleSeries& s, const std::filesystem::path& path);
SampleSeries read_series_csv(const std::filesystem::path& path);

}  // namespace l96
