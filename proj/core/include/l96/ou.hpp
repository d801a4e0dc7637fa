#pragma once

#include <cstdint>

#include "l96/integrator.hpp"
#include "l96/model.hpp"

namespace l96 {

/// Ornstein-Uhlenbeck process dz = -Gamma (z - m) dt + L_x x dt + sigma dW,
/// the analytic oracle for the quasi-Gaussian response pipeline: its
/// response operator is exactly Gamma^{-1} and its mean shift under a frozen
/// x-perturbation is Gamma^{-1} L_x (x - x*).
struct OUSpec {
  Matrix gamma;        // N x N, symmetric part positive definite
  Vector m;            // N
  Matrix sigma_noise;  // N x K noise loading (K may be 0 for deterministic runs)
  Matrix l_x;          // N x P coupling (may be 0x0 when unused)
  Vector x;            // P frozen parameter
  Vector z0;           // optional initial state; empty starts at m
  double dt = 1e-3;    // Euler-Maruyama step
  std::uint64_t seed = 0;

  int dim() const { return static_cast<int>(gamma.rows()); }
  void validate() const;
};

/// Euler-Maruyama path sampled per plan. The step is spec.dt (plan.dt is
/// ignored); plan supplies spin_up, duration and sample_every.
SampleSeries ou_simulate(const OUSpec& spec, const IntegrationPlan& plan);

}  // namespace l96
