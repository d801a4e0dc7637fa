#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "l96/errors.hpp"

namespace l96 {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ConstRef = Eigen::Ref<const Vector>;
using MutRef = Eigen::Ref<Vector>;

/// Long-term mean and standard deviation of the uncoupled model at one
/// forcing value. Scalar by translational invariance.
struct RescaleConstants {
  double mean = 0.0;
  double beta = 1.0;
};

/// All two-scale model parameters plus the rescaling constants for both
/// forcings. Single source of truth for dimensions and coupling.
///
/// State layouts used throughout:
///   slow x: length n_x, periodic (x_{i+n_x} = x_i)
///   fast y: length n_y = n_x*j, flat row-major blocks (i outer, k inner);
///           the (i, k=j) wrap reads (i+1, 0), i.e. the flat array is one
///           periodic ring of length n_y
///   full state: [x; y], length n_x + n_y
struct ModelParams {
  int n_x = 20;
  int j = 4;
  double eps = 0.01;
  double f_x = 6.0;
  double f_y = 8.0;
  double lambda_x = 0.3;
  double lambda_y = 0.3;
  RescaleConstants rescale_x;
  RescaleConstants rescale_y;

  int n_y() const { return n_x * j; }
  int dim_full() const { return n_x + n_y(); }
  void validate() const;
};

// Right-hand sides. Each has an in-place form (hot path, no allocation)
// and an allocating convenience form.

/// Uncoupled model: dx_i = x_{i-1}(x_{i+1} - x_{i-2}) - x_i + f.
void l96_rhs(ConstRef x, double forcing, MutRef dx);
Vector l96_rhs(ConstRef x, double forcing);

/// Rescaled uncoupled model:
/// dx_i = x_{i-1}(x_{i+1} - x_{i-2}) + (1/beta)[mean*(x_{i+1} - x_{i-2}) - x_i]
///        + (f - mean)/beta^2.
void rescaled_l96_rhs(ConstRef x, double forcing, const RescaleConstants& r, MutRef dx);
Vector rescaled_l96_rhs(ConstRef x, double forcing, const RescaleConstants& r);

/// Coupled rescaled two-scale model on the full state [x; y].
/// Slow part: rescaled slow model minus (lambda_y/j) * block sums of y.
/// Fast part: (1/eps) * rescaled fast-stencil model plus (lambda_x/eps) * x_i.
void two_scale_rhs(ConstRef state, const ModelParams& p, MutRef dstate);
Vector two_scale_rhs(ConstRef state, const ModelParams& p);

/// Fast limiting dynamics at order-1 time scale (the eps-rescaled fast
/// subsystem with x frozen): dz = eps*g(z) + lambda_x * L^T x_star.
void fast_limiting_rhs(ConstRef z, ConstRef x_star, const ModelParams& p, MutRef dz);
Vector fast_limiting_rhs(ConstRef z, ConstRef x_star, const ModelParams& p);

/// Reduced slow model: dx = f(x) + b_star - c_star (x - x_star).
/// With zero_order set the linear correction is skipped entirely, which is
/// the zero-order ("poor man's") closure; same code path either way.
void reduced_rhs(ConstRef x, double forcing, const RescaleConstants& r,
                 ConstRef x_star, ConstRef b_star, const Matrix& c_star,
                 bool zero_order, MutRef dx);
Vector reduced_rhs(ConstRef x, double forcing, const RescaleConstants& r,
                   ConstRef x_star, ConstRef b_star, const Matrix& c_star,
                   bool zero_order);

// Integration-ready systems. Each caches derived constants and exposes
// operator()(const Vector&, Vector&) for the stepper.

class UncoupledL96 {
 public:
  UncoupledL96(int n, double forcing) : n_(n), f_(forcing) {}
  int dim() const { return n_; }
  void operator()(const Vector& x, Vector& dx) const { l96_rhs(x, f_, dx); }

 private:
  int n_;
  double f_;
};

class RescaledL96 {
 public:
  RescaledL96(int n, double forcing, const RescaleConstants& r)
      : n_(n), f_(forcing), r_(r) {}
  int dim() const { return n_; }
  void operator()(const Vector& x, Vector& dx) const {
    rescaled_l96_rhs(x, f_, r_, dx);
  }

 private:
  int n_;
  double f_;
  RescaleConstants r_;
};

class TwoScaleSystem {
 public:
  explicit TwoScaleSystem(const ModelParams& p) : p_(p) { p_.validate(); }
  int dim() const { return p_.dim_full(); }
  const ModelParams& params() const { return p_; }
  void operator()(const Vector& s, Vector& ds) const { two_scale_rhs(s, p_, ds); }

 private:
  ModelParams p_;
};

class FastLimitingSystem {
 public:
  FastLimitingSystem(const ModelParams& p, ConstRef x_star);
  int dim() const { return p_.n_y(); }
  void operator()(const Vector& z, Vector& dz) const;

 private:
  ModelParams p_;
  Vector x_star_;
};

class ReducedSystem {
 public:
  ReducedSystem(const ModelParams& p, Vector x_star, Vector b_star, Matrix c_star,
                bool zero_order);
  int dim() const { return p_.n_x; }
  void operator()(const Vector& x, Vector& dx) const;

 private:
  ModelParams p_;
  Vector x_star_, b_star_;
  Matrix c_star_;
  bool zero_order_;
  mutable Vector diff_;
};

/// Protocol for estimating the rescale constants of Eq.-L96-type runs.
struct CalibrationPlan {
  int n = 40;
  double t_total = 10000.0;
  double dt = 5e-3;
  double spin_up = 100.0;
  std::uint64_t seed = 1;
  double degeneracy_threshold = 1e-3;
};

/// Integrates the uncoupled model from forcing + uniform[-0.5, 0.5]
/// perturbations, discards the spin-up, and pools mean/stddev across all
/// indices and time steps. Throws DegenerateAttractorError when the pooled
/// stddev falls below the threshold (fixed point; rescaling undefined).
RescaleConstants calibrate(double forcing, const CalibrationPlan& plan = {});
RescaleConstants calibrate(double forcing, int n, double t_total, double dt,
                           double spin_up, std::uint64_t seed);

}  // namespace l96
