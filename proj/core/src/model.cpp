#include "l96/model.hpp"

#include <cmath>

#include "l96/integrator.hpp"

namespace l96 {

namespace {

void check_length(Eigen::Index n, const char* who) {
  if (n < 4) throw DimensionError(std::string(who) + ": state length must be >= 4");
}

void check_rescale(const RescaleConstants& r, const char* who) {
  if (!(r.beta > 0.0)) throw InvalidRescaleError(std::string(who) + ": beta must be positive");
}

// dx_i = (x_{i-1} + a)(x_{i+1} - x_{i-2}) - b x_i + c, periodic, n >= 4.
// The slow/uncoupled stencil; boundaries unrolled so the bulk loop carries
// no wraparound arithmetic.
inline void advect_forward(const double* x, double* dx, int n, double a, double b, double c) {
  dx[0] = (x[n - 1] + a) * (x[1] - x[n - 2]) - b * x[0] + c;
  dx[1] = (x[0] + a) * (x[2] - x[n - 1]) - b * x[1] + c;
  for (int i = 2; i + 1 < n; ++i)
    dx[i] = (x[i - 1] + a) * (x[i + 1] - x[i - 2]) - b * x[i] + c;
  dx[n - 1] = (x[n - 2] + a) * (x[0] - x[n - 3]) - b * x[n - 1] + c;
}

// dy_m = (y_{m+1} + a)(y_{m-1} - y_{m+2}) - b y_m + c, periodic. The fast
// stencil advects in the opposite index direction.
inline void advect_backward(const double* y, double* dy, int n, double a, double b, double c) {
  dy[0] = (y[1] + a) * (y[n - 1] - y[2]) - b * y[0] + c;
  for (int m = 1; m + 2 < n; ++m)
    dy[m] = (y[m + 1] + a) * (y[m - 1] - y[m + 2]) - b * y[m] + c;
  dy[n - 2] = (y[n - 1] + a) * (y[n - 3] - y[0]) - b * y[n - 2] + c;
  dy[n - 1] = (y[0] + a) * (y[n - 2] - y[1]) - b * y[n - 1] + c;
}

struct RescaledTerms {
  double a, b, c;
  RescaledTerms(double forcing, const RescaleConstants& r)
      : a(r.mean / r.beta), b(1.0 / r.beta), c((forcing - r.mean) / (r.beta * r.beta)) {}
};

}  // namespace

void ModelParams::validate() const {
  if (n_x < 4) throw DimensionError("ModelParams: n_x must be >= 4");
  if (j < 1) throw DimensionError("ModelParams: j must be >= 1");
  if (!(eps > 0.0)) throw Error("ModelParams: eps must be positive");
  check_rescale(rescale_x, "ModelParams.rescale_x");
  check_rescale(rescale_y, "ModelParams.rescale_y");
}

void l96_rhs(ConstRef x, double forcing, MutRef dx) {
  check_length(x.size(), "l96_rhs");
  if (dx.size() != x.size()) throw DimensionError("l96_rhs: output size mismatch");
  advect_forward(x.data(), dx.data(), static_cast<int>(x.size()), 0.0, 1.0, forcing);
}

Vector l96_rhs(ConstRef x, double forcing) {
  Vector dx(x.size());
  l96_rhs(x, forcing, dx);
  return dx;
}

void rescaled_l96_rhs(ConstRef x, double forcing, const RescaleConstants& r, MutRef dx) {
  check_length(x.size(), "rescaled_l96_rhs");
  check_rescale(r, "rescaled_l96_rhs");
  if (dx.size() != x.size()) throw DimensionError("rescaled_l96_rhs: output size mismatch");
  RescaledTerms t(forcing, r);
  advect_forward(x.data(), dx.data(), static_cast<int>(x.size()), t.a, t.b, t.c);
}

Vector rescaled_l96_rhs(ConstRef x, double forcing, const RescaleConstants& r) {
  Vector dx(x.size());
  rescaled_l96_rhs(x, forcing, r, dx);
  return dx;
}

void two_scale_rhs(ConstRef state, const ModelParams& p, MutRef dstate) {
  p.validate();
  const int nx = p.n_x, ny = p.n_y();
  if (state.size() != nx + ny || dstate.size() != state.size())
    throw DimensionError("two_scale_rhs: state dimension mismatch");

  const double* x = state.data();
  const double* y = state.data() + nx;
  double* dx = dstate.data();
  double* dy = dstate.data() + nx;

  RescaledTerms tx(p.f_x, p.rescale_x);
  advect_forward(x, dx, nx, tx.a, tx.b, tx.c);
  const double ly_over_j = p.lambda_y / p.j;
  for (int i = 0; i < nx; ++i) {
    double s = 0.0;
    const double* blk = y + static_cast<std::ptrdiff_t>(i) * p.j;
    for (int k = 0; k < p.j; ++k) s += blk[k];
    dx[i] -= ly_over_j * s;
  }

  RescaledTerms ty(p.f_y, p.rescale_y);
  advect_backward(y, dy, ny, ty.a, ty.b, ty.c);
  const double inv_eps = 1.0 / p.eps;
  const double lx_over_eps = p.lambda_x / p.eps;
  for (int i = 0; i < nx; ++i) {
    const double drive = lx_over_eps * x[i];
    double* blk = dy + static_cast<std::ptrdiff_t>(i) * p.j;
    for (int k = 0; k < p.j; ++k) blk[k] = inv_eps * blk[k] + drive;
  }
}

Vector two_scale_rhs(ConstRef state, const ModelParams& p) {
  Vector ds(state.size());
  two_scale_rhs(state, p, ds);
  return ds;
}

void fast_limiting_rhs(ConstRef z, ConstRef x_star, const ModelParams& p, MutRef dz) {
  p.validate();
  const int nx = p.n_x, ny = p.n_y();
  if (z.size() != ny || dz.size() != ny)
    throw DimensionError("fast_limiting_rhs: fast state dimension mismatch");
  if (x_star.size() != nx) throw DimensionError("fast_limiting_rhs: x_star dimension mismatch");

  RescaledTerms ty(p.f_y, p.rescale_y);
  advect_backward(z.data(), dz.data(), ny, ty.a, ty.b, ty.c);
  double* d = dz.data();
  for (int i = 0; i < nx; ++i) {
    const double drive = p.lambda_x * x_star[i];
    double* blk = d + static_cast<std::ptrdiff_t>(i) * p.j;
    for (int k = 0; k < p.j; ++k) blk[k] += drive;
  }
}

Vector fast_limiting_rhs(ConstRef z, ConstRef x_star, const ModelParams& p) {
  Vector dz(z.size());
  fast_limiting_rhs(z, x_star, p, dz);
  return dz;
}

void reduced_rhs(ConstRef x, double forcing, const RescaleConstants& r, ConstRef x_star,
                 ConstRef b_star, const Matrix& c_star, bool zero_order, MutRef dx) {
  const Eigen::Index n = x.size();
  if (x_star.size() != n || b_star.size() != n)
    throw DimensionError("reduced_rhs: x_star/b_star dimension mismatch");
  if (!zero_order && (c_star.rows() != n || c_star.cols() != n))
    throw DimensionError("reduced_rhs: c_star dimension mismatch");
  rescaled_l96_rhs(x, forcing, r, dx);
  dx += b_star;
  if (!zero_order) dx.noalias() -= c_star * (x - x_star);
}

Vector reduced_rhs(ConstRef x, double forcing, const RescaleConstants& r, ConstRef x_star,
                   ConstRef b_star, const Matrix& c_star, bool zero_order) {
  Vector dx(x.size());
  reduced_rhs(x, forcing, r, x_star, b_star, c_star, zero_order, dx);
  return dx;
}

FastLimitingSystem::FastLimitingSystem(const ModelParams& p, ConstRef x_star)
    : p_(p), x_star_(x_star) {
  p_.validate();
  if (x_star_.size() != p_.n_x)
    throw DimensionError("FastLimitingSystem: x_star dimension mismatch");
}

void FastLimitingSystem::operator()(const Vector& z, Vector& dz) const {
  fast_limiting_rhs(z, x_star_, p_, dz);
}

ReducedSystem::ReducedSystem(const ModelParams& p, Vector x_star, Vector b_star,
                             Matrix c_star, bool zero_order)
    : p_(p),
      x_star_(std::move(x_star)),
      b_star_(std::move(b_star)),
      c_star_(std::move(c_star)),
      zero_order_(zero_order),
      diff_(p.n_x) {
  p_.validate();
  if (x_star_.size() != p_.n_x || b_star_.size() != p_.n_x)
    throw DimensionError("ReducedSystem: x_star/b_star dimension mismatch");
  if (c_star_.rows() != p_.n_x || c_star_.cols() != p_.n_x)
    throw DimensionError("ReducedSystem: c_star dimension mismatch");
}

void ReducedSystem::operator()(const Vector& x, Vector& dx) const {
  rescaled_l96_rhs(x, p_.f_x, p_.rescale_x, dx);
  dx += b_star_;
  if (!zero_order_) {
    diff_ = x - x_star_;
    dx.noalias() -= c_star_ * diff_;
  }
}

RescaleConstants calibrate(double forcing, const CalibrationPlan& plan) {
  if (plan.n < 4) throw DimensionError("calibrate: n must be >= 4");
  if (!(plan.dt > 0.0) || !(plan.t_total > plan.spin_up))
    throw Error("calibrate: need dt > 0 and t_total > spin_up");

  UncoupledL96 sys(plan.n, forcing);
  Vector x = perturbed_state(plan.n, forcing, 0.5, plan.seed);
  IntegrationPlan ip{plan.dt, plan.spin_up, plan.t_total - plan.spin_up, 1, plan.seed};

  double sum = 0.0, sumsq = 0.0;
  long long count = 0;
  integrate_observe(sys, x, ip, [&](double, const Vector& s) {
    sum += s.sum();
    sumsq += s.squaredNorm();
    count += s.size();
  });

  const double mean = sum / static_cast<double>(count);
  const double var = sumsq / static_cast<double>(count) - mean * mean;
  const double beta = std::sqrt(std::max(var, 0.0));
  if (beta < plan.degeneracy_threshold)
    throw DegenerateAttractorError(
        "calibrate: pooled stddev " + std::to_string(beta) +
        " below threshold; system at or near a fixed point, rescaling undefined");
  return {mean, beta};
}

RescaleConstants calibrate(double forcing, int n, double t_total, double dt, double spin_up,
                           std::uint64_t seed) {
  CalibrationPlan plan;
  plan.n = n;
  plan.t_total = t_total;
  plan.dt = dt;
  plan.spin_up = spin_up;
  plan.seed = seed;
  return calibrate(forcing, plan);
}

}  // namespace l96
