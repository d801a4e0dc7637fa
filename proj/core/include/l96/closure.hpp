#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <utility>
#include <vector>

#include "l96/integrator.hpp"
#include "l96/model.hpp"

namespace l96 {

/// Sample mean and doubly-centered covariance over the first `count`
/// samples (all samples when count < 0). Two accumulation passes over raw
/// moments; covariance is exactly symmetric by construction.
std::pair<Vector, Matrix> accumulate_moments(const SampleSeries& series, long long count = -1);

/// C(s_m) = (1/K) sum_{tau<K} z(tau+s_m) (z(tau) - z_bar)^T on the uniform
/// lag grid s_m = m * lag_stride * dt_sample, m = 0..M. Every lag averages
/// over the same window tau in [0, K), K = count - M*lag_stride, and z_bar
/// is the mean over that window, so C(0) coincides with the windowed
/// covariance identically.
struct LaggedCovariance {
  double dt_lag = 0.0;
  std::vector<Matrix> matrices;
};

LaggedCovariance lagged_covariance(const SampleSeries& series, double t_corr,
                                   int lag_stride = 1);

/// Trapezoidal integral over the lag grid.
Matrix trapezoid_lag_integral(const LaggedCovariance& lc);

/// R* = [integral of C(s) ds] * Sigma^{-1}, the inverse applied through an
/// LLT factorization (solve, never an explicit inverse). Throws
/// NonSpdCovarianceError on factorization failure; the opt-in ridge adds
/// (1e-8 * trace/N) * I before factorizing.
Matrix response_operator(const LaggedCovariance& lc, const Matrix& sigma, bool ridge = false);

/// A * Sigma^{-1} via LLT. Shared by response_operator and the streaming path.
Matrix solve_spd_right(const Matrix& a, const Matrix& sigma, bool ridge = false);

/// Single-pass streaming accumulator for mean, covariance and the
/// trapezoidal lag integral of C(s). Keeps a ring buffer of the last
/// max_lag_index*lag_stride + lag_stride + 1 samples; memory is independent
/// of the averaging window. The lag integral it produces equals
/// trapezoid_lag_integral(lagged_covariance(...)) exactly (same window, same
/// weights), up to floating-point summation order.
class ClosureAccumulator {
 public:
  ClosureAccumulator(int dim, int max_lag_index, int lag_stride, double dt_sample);

  void push(ConstRef z);
  void push_all(const SampleSeries& series);

  long long pushed() const { return pushed_; }
  /// Number of completed window terms K = pushed - M*stride.
  long long window_count() const { return accumulated_; }

  Vector mean() const;
  Matrix covariance() const;
  Matrix lag_integral() const;
  double dt_sample() const { return dt_sample_; }
  double dt_lag() const { return dt_lag_; }
  int max_lag_index() const { return m_lags_; }

 private:
  const Vector& ring_at(long long abs_index) const;

  int dim_, m_lags_, stride_;
  double dt_sample_, dt_lag_;
  long long span_;      // m_lags_ * stride_
  long long ring_cap_;  // span_ + stride_ + 1
  std::vector<Vector> ring_;
  std::vector<Vector> comb_;  // one sliding lag-comb sum per residue class
  std::vector<char> comb_ready_;
  Vector s1_, sw_, w_tmp_;
  Matrix s2_, a_;
  long long pushed_ = 0, accumulated_ = 0;
};

/// Frozen-state closure: everything the reduced model needs.
struct ClosureData {
  ModelParams params;
  Vector x_star;      // n_x
  Vector z_bar_star;  // n_y
  Matrix sigma_star;  // n_y x n_y
  Matrix r_star;      // n_y x n_y
  Vector b_star;      // n_x, equals -(lambda_y/j) L z_bar_star
  Matrix c_star;      // n_x x n_x, equals (lambda_x lambda_y/j) L R* L^T

  // provenance
  double t_av = 0.0, t_corr = 0.0, dt_sample = 0.0;
  std::uint64_t seed = 0;
};

// The coupling matrix L has L_{i,(j,k)} = delta_{ij}: L y sums fast blocks,
// L^T x replicates x over blocks, and L L^T = j * I.
Vector block_sum(ConstRef y, int n_x, int j);
Vector block_expand(ConstRef x, int j);
Matrix block_contract(const Matrix& r, int n_x, int j);

/// Group average over cyclic index shifts by multiples of step: the
/// minimum-variance unbiased projection when the estimated quantity is
/// invariant under those shifts (a circulant matrix for step 1). The output
/// is exactly shift-invariant by construction.
Matrix cyclic_shift_average(const Matrix& m, int step);
Vector cyclic_shift_average(ConstRef v, int step);

/// Assembles b_star and c_star from the measured pieces; used by
/// build_closure and directly by tests that inject synthetic moments.
ClosureData assemble_closure(Vector x_star, Vector z_bar, Matrix sigma, Matrix r_star,
                             const ModelParams& p);

/// Full quasi-Gaussian pipeline over a fast-limiting trajectory stream:
/// windowed moments, lag integral, R* = integral * Sigma^{-1}, then the
/// assembled slow-equation terms. Only the stream is consumed; the fast
/// right-hand side is never needed.
///
/// shift_symmetry > 0 declares that the stream's statistics are invariant
/// under cyclic index shifts by that step (1 for the fast ring under a
/// uniform frozen state); the measured moments and lag integral are then
/// group-averaged before the solve, which removes the noise bias on the
/// small eigenvalues of R* without touching its expectation.
ClosureData build_closure(const SampleSeries& fast_series, ConstRef x_star,
                          const ModelParams& p, double t_corr, int lag_stride = 1,
                          bool ridge = false, int shift_symmetry = 0);

/// build_closure on an already-filled streaming accumulator.
ClosureData build_closure(const ClosureAccumulator& acc, ConstRef x_star,
                          const ModelParams& p, bool ridge = false, int shift_symmetry = 0);

nlohmann::json params_to_json(const ModelParams& p);
ModelParams params_from_json(const nlohmann::json& j);
nlohmann::json closure_to_json(const ClosureData& c);
ClosureData closure_from_json(const nlohmann::json& j);
void write_closure_json(const ClosureData& c, const std::filesystem::path& path);
ClosureData read_closure_json(const std::filesystem::path& path);

}  // namespace l96
