#include "l96/ou.hpp"

#include <cmath>
#include <random>

namespace l96 {

void OUSpec::validate() const {
  const Eigen::Index n = gamma.rows();
  if (n < 1 || gamma.cols() != n) throw DimensionError("OUSpec: gamma must be square");
  if (m.size() != n) throw DimensionError("OUSpec: m length mismatch");
  if (sigma_noise.size() > 0 && sigma_noise.rows() != n)
    throw DimensionError("OUSpec: sigma_noise row count mismatch");
  if (l_x.size() > 0) {
    if (l_x.rows() != n) throw DimensionError("OUSpec: l_x row count mismatch");
    if (l_x.cols() != x.size()) throw DimensionError("OUSpec: l_x/x shape mismatch");
  } else if (x.size() > 0) {
    throw DimensionError("OUSpec: x given without l_x");
  }
  if (z0.size() > 0 && z0.size() != n) throw DimensionError("OUSpec: z0 length mismatch");
  if (!(dt > 0.0)) throw Error("OUSpec: dt must be positive");
}

SampleSeries ou_simulate(const OUSpec& spec, const IntegrationPlan& plan) {
  spec.validate();
  IntegrationPlan p = plan;
  p.dt = spec.dt;
  p.validate();

  const Eigen::Index n = spec.gamma.rows();
  const Eigen::Index kdim = spec.sigma_noise.size() > 0 ? spec.sigma_noise.cols() : 0;

  Vector force = spec.gamma * spec.m;
  if (spec.l_x.size() > 0) force += spec.l_x * spec.x;

  Vector z = spec.z0.size() > 0 ? spec.z0 : spec.m;
  std::mt19937_64 gen(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sqrt_dt = std::sqrt(spec.dt);

  Vector xi(kdim), drift(n);
  long long steps_done = 0;
  auto advance = [&](long long k) {
    for (long long q = 0; q < k; ++q) {
      drift.noalias() = force - spec.gamma * z;
      z += spec.dt * drift;
      if (kdim > 0) {
        for (Eigen::Index i = 0; i < kdim; ++i) xi[i] = normal(gen);
        z.noalias() += sqrt_dt * (spec.sigma_noise * xi);
      }
      ++steps_done;
      if (!z.allFinite())
        throw BlowUpError("OU path blew up", static_cast<double>(steps_done) * spec.dt);
    }
  };

  SampleSeries out;
  out.dim = static_cast<int>(n);
  out.dt_sample = p.dt_sample();
  out.t_start = p.spin_up;
  out.data.reserve(static_cast<std::size_t>(p.sample_count()) * n);

  advance(p.spin_steps());
  const long long n_samples = p.sample_count();
  for (long long k = 0; k < n_samples; ++k) {
    if (k > 0) advance(p.sample_every);
    out.push(z);
  }
  return out;
}

}  // namespace l96
