#include "l96/closure.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <fstream>

namespace l96 {

namespace {

long long lag_count(double t_corr, double dt_lag) {
  if (!(t_corr > 0.0)) throw Error("closure: t_corr must be positive");
  if (!(dt_lag > 0.0)) throw Error("closure: series dt_sample must be positive");
  return static_cast<long long>(std::floor(t_corr / dt_lag + 1e-9));
}

}  // namespace

std::pair<Vector, Matrix> accumulate_moments(const SampleSeries& series, long long count) {
  const long long n = count < 0 ? series.count() : count;
  if (n <= 0) throw EmptyInputError("accumulate_moments: empty series");
  if (n > series.count()) throw InsufficientDataError("accumulate_moments: count exceeds series");

  const int d = series.dim;
  Vector s1 = Vector::Zero(d);
  Matrix s2 = Matrix::Zero(d, d);
  for (long long k = 0; k < n; ++k) {
    auto z = series.sample(k);
    s1 += z;
    s2.selfadjointView<Eigen::Lower>().rankUpdate(z);
  }
  Vector mean = s1 / static_cast<double>(n);
  Matrix cov = Matrix(s2.selfadjointView<Eigen::Lower>()) / static_cast<double>(n);
  cov -= mean * mean.transpose();
  return {std::move(mean), std::move(cov)};
}

LaggedCovariance lagged_covariance(const SampleSeries& series, double t_corr, int lag_stride) {
  if (lag_stride < 1) throw Error("lagged_covariance: lag_stride must be >= 1");
  const long long n = series.count();
  const double dt_lag = series.dt_sample * lag_stride;
  const long long m_lags = lag_count(t_corr, dt_lag);
  const long long span = m_lags * lag_stride;
  const long long window = n - span;
  if (window < 1)
    throw InsufficientDataError("lagged_covariance: series shorter than the lag window");

  auto [mean, cov] = accumulate_moments(series, window);
  (void)cov;

  const int d = series.dim;
  auto full = series.matrix();
  Matrix centered = full.leftCols(window);
  centered.colwise() -= mean;

  LaggedCovariance lc;
  lc.dt_lag = dt_lag;
  lc.matrices.reserve(m_lags + 1);
  for (long long m = 0; m <= m_lags; ++m) {
    Matrix c(d, d);
    c.noalias() = full.middleCols(m * lag_stride, window) * centered.transpose();
    c /= static_cast<double>(window);
    lc.matrices.push_back(std::move(c));
  }
  return lc;
}

Matrix trapezoid_lag_integral(const LaggedCovariance& lc) {
  if (lc.matrices.empty()) throw EmptyInputError("trapezoid_lag_integral: no lag matrices");
  const std::size_t m = lc.matrices.size();
  Matrix acc = Matrix::Zero(lc.matrices[0].rows(), lc.matrices[0].cols());
  if (m == 1) return acc;  // zero-width integral
  acc = 0.5 * lc.matrices.front();
  for (std::size_t k = 1; k + 1 < m; ++k) acc += lc.matrices[k];
  acc += 0.5 * lc.matrices.back();
  return acc * lc.dt_lag;
}

Matrix solve_spd_right(const Matrix& a, const Matrix& sigma, bool ridge) {
  if (sigma.rows() != sigma.cols() || a.cols() != sigma.rows())
    throw DimensionError("solve_spd_right: shape mismatch");
  const double scale = sigma.norm();
  if (!((sigma - sigma.transpose()).norm() <= 1e-8 * std::max(scale, 1e-300)))
    throw NonSpdCovarianceError("covariance is not symmetric");
  Matrix s = sigma;
  if (ridge) {
    const double delta = 1e-8 * s.trace() / static_cast<double>(s.rows());
    s.diagonal().array() += delta;
  }
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success)
    throw NonSpdCovarianceError("covariance factorization failed (not SPD)");
  // R = A Sigma^{-1}  <=>  R^T = Sigma^{-1} A^T
  return llt.solve(a.transpose()).transpose();
}

Matrix response_operator(const LaggedCovariance& lc, const Matrix& sigma, bool ridge) {
  return solve_spd_right(trapezoid_lag_integral(lc), sigma, ridge);
}

ClosureAccumulator::ClosureAccumulator(int dim, int max_lag_index, int lag_stride,
                                       double dt_sample)
    : dim_(dim),
      m_lags_(max_lag_index),
      stride_(lag_stride),
      dt_sample_(dt_sample),
      dt_lag_(dt_sample * lag_stride),
      span_(static_cast<long long>(max_lag_index) * lag_stride),
      ring_cap_(span_ + lag_stride + 1),
      s1_(Vector::Zero(dim)),
      sw_(Vector::Zero(dim)),
      w_tmp_(dim),
      s2_(Matrix::Zero(dim, dim)),
      a_(Matrix::Zero(dim, dim)) {
  if (dim < 1 || max_lag_index < 0 || lag_stride < 1 || !(dt_sample > 0.0))
    throw Error("ClosureAccumulator: bad construction arguments");
  ring_.assign(static_cast<std::size_t>(ring_cap_), Vector(dim));
  comb_.assign(static_cast<std::size_t>(stride_), Vector::Zero(dim));
  comb_ready_.assign(static_cast<std::size_t>(stride_), 0);
}

const Vector& ClosureAccumulator::ring_at(long long abs_index) const {
  return ring_[static_cast<std::size_t>(abs_index % ring_cap_)];
}

void ClosureAccumulator::push(ConstRef z) {
  if (static_cast<int>(z.size()) != dim_)
    throw DimensionError("ClosureAccumulator::push: dimension mismatch");
  ring_[static_cast<std::size_t>(pushed_ % ring_cap_)] = z;
  const long long q = pushed_++;
  const long long tau = q - span_;
  if (tau < 0) return;

  const auto r = static_cast<std::size_t>(tau % stride_);
  Vector& comb = comb_[r];
  if (!comb_ready_[r]) {
    comb.setZero();
    for (int m = 0; m <= m_lags_; ++m) comb += ring_at(tau + static_cast<long long>(m) * stride_);
    comb_ready_[r] = 1;
  } else {
    comb += ring_at(q) - ring_at(tau - stride_);
  }

  const Vector& zt = ring_at(tau);
  // trapezoid weights: half at both ends of the lag comb
  w_tmp_ = dt_lag_ * (comb - 0.5 * (zt + ring_at(q)));

  s1_ += zt;
  s2_.selfadjointView<Eigen::Lower>().rankUpdate(zt);
  sw_ += w_tmp_;
  a_.noalias() += w_tmp_ * zt.transpose();
  ++accumulated_;
}

void ClosureAccumulator::push_all(const SampleSeries& series) {
  if (series.dim != dim_) throw DimensionError("ClosureAccumulator: series dimension mismatch");
  const long long n = series.count();
  for (long long k = 0; k < n; ++k) push(series.sample(k));
}

Vector ClosureAccumulator::mean() const {
  if (accumulated_ < 1) throw InsufficientDataError("ClosureAccumulator: no complete window");
  return s1_ / static_cast<double>(accumulated_);
}

Matrix ClosureAccumulator::covariance() const {
  if (accumulated_ < 1) throw InsufficientDataError("ClosureAccumulator: no complete window");
  Vector mu = mean();
  Matrix cov = Matrix(s2_.selfadjointView<Eigen::Lower>()) / static_cast<double>(accumulated_);
  cov -= mu * mu.transpose();
  return cov;
}

Matrix ClosureAccumulator::lag_integral() const {
  if (accumulated_ < 1) throw InsufficientDataError("ClosureAccumulator: no complete window");
  const double k = static_cast<double>(accumulated_);
  return a_ / k - (sw_ / k) * mean().transpose();
}

Vector block_sum(ConstRef y, int n_x, int j) {
  if (y.size() != static_cast<Eigen::Index>(n_x) * j)
    throw DimensionError("block_sum: fast vector length mismatch");
  Vector out(n_x);
  for (int i = 0; i < n_x; ++i) out[i] = y.segment(static_cast<Eigen::Index>(i) * j, j).sum();
  return out;
}

Vector block_expand(ConstRef x, int j) {
  Vector out(x.size() * j);
  for (Eigen::Index i = 0; i < x.size(); ++i) out.segment(i * j, j).setConstant(x[i]);
  return out;
}

Matrix block_contract(const Matrix& r, int n_x, int j) {
  const Eigen::Index ny = static_cast<Eigen::Index>(n_x) * j;
  if (r.rows() != ny || r.cols() != ny)
    throw DimensionError("block_contract: matrix shape mismatch");
  Matrix out(n_x, n_x);
  for (int a = 0; a < n_x; ++a)
    for (int b = 0; b < n_x; ++b)
      out(a, b) = r.block(static_cast<Eigen::Index>(a) * j, static_cast<Eigen::Index>(b) * j, j, j).sum();
  return out;
}

Matrix cyclic_shift_average(const Matrix& m, int step) {
  const int n = static_cast<int>(m.rows());
  if (m.cols() != n) throw DimensionError("cyclic_shift_average: matrix must be square");
  if (step < 1 || n % step != 0) throw Error("cyclic_shift_average: step must divide the dimension");
  const int g_count = n / step;
  Matrix out(n, n);
  // one average per orbit (residue r, diagonal offset d), then exact fill
  for (int r = 0; r < step; ++r) {
    for (int d = 0; d < n; ++d) {
      double acc = 0.0;
      for (int g = 0; g < g_count; ++g) {
        const int a = (r + g * step) % n;
        acc += m(a, (a + d) % n);
      }
      const double val = acc / g_count;
      for (int g = 0; g < g_count; ++g) {
        const int a = (r + g * step) % n;
        out(a, (a + d) % n) = val;
      }
    }
  }
  return out;
}

Vector cyclic_shift_average(ConstRef v, int step) {
  const int n = static_cast<int>(v.size());
  if (step < 1 || n % step != 0) throw Error("cyclic_shift_average: step must divide the dimension");
  const int g_count = n / step;
  Vector out(n);
  for (int r = 0; r < step; ++r) {
    double acc = 0.0;
    for (int g = 0; g < g_count; ++g) acc += v[r + g * step];
    const double val = acc / g_count;
    for (int g = 0; g < g_count; ++g) out[r + g * step] = val;
  }
  return out;
}

ClosureData assemble_closure(Vector x_star, Vector z_bar, Matrix sigma, Matrix r_star,
                             const ModelParams& p) {
  p.validate();
  const int nx = p.n_x, ny = p.n_y();
  if (x_star.size() != nx) throw DimensionError("assemble_closure: x_star length mismatch");
  if (z_bar.size() != ny) throw DimensionError("assemble_closure: z_bar length mismatch");
  if (sigma.rows() != ny || sigma.cols() != ny || r_star.rows() != ny || r_star.cols() != ny)
    throw DimensionError("assemble_closure: matrix shape mismatch");

  ClosureData c;
  c.params = p;
  c.x_star = std::move(x_star);
  c.z_bar_star = std::move(z_bar);
  c.sigma_star = std::move(sigma);
  c.r_star = std::move(r_star);
  c.b_star = -(p.lambda_y / p.j) * block_sum(c.z_bar_star, nx, p.j);
  c.c_star = (p.lambda_x * p.lambda_y / p.j) * block_contract(c.r_star, nx, p.j);
  return c;
}

ClosureData build_closure(const ClosureAccumulator& acc, ConstRef x_star, const ModelParams& p,
                          bool ridge, int shift_symmetry) {
  Vector mean = acc.mean();
  Matrix sigma = acc.covariance();
  Matrix integral = acc.lag_integral();
  if (shift_symmetry > 0) {
    mean = cyclic_shift_average(mean, shift_symmetry);
    sigma = cyclic_shift_average(sigma, shift_symmetry);
    integral = cyclic_shift_average(integral, shift_symmetry);
  }
  Matrix r = solve_spd_right(integral, sigma, ridge);
  ClosureData c = assemble_closure(Vector(x_star), std::move(mean), std::move(sigma), std::move(r), p);
  c.t_av = static_cast<double>(acc.window_count() - 1) * acc.dt_sample();
  c.t_corr = acc.max_lag_index() * acc.dt_lag();
  c.dt_sample = acc.dt_sample();
  return c;
}

ClosureData build_closure(const SampleSeries& fast_series, ConstRef x_star, const ModelParams& p,
                          double t_corr, int lag_stride, bool ridge, int shift_symmetry) {
  if (fast_series.dim != p.n_y())
    throw DimensionError("build_closure: series dimension != n_y");
  const long long m_lags = lag_count(t_corr, fast_series.dt_sample * lag_stride);
  ClosureAccumulator acc(fast_series.dim, static_cast<int>(m_lags), lag_stride,
                         fast_series.dt_sample);
  acc.push_all(fast_series);
  if (acc.window_count() < 1)
    throw InsufficientDataError("build_closure: series shorter than the lag window");
  return build_closure(acc, x_star, p, ridge, shift_symmetry);
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> flat(static_cast<std::size_t>(m.size()));
  // row-major on the wire
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      flat[static_cast<std::size_t>(r * m.cols() + c)] = m(r, c);
  j["data"] = flat;
  return j;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
  const auto flat = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(flat.size()) != rows * cols)
    throw IoError("matrix payload size mismatch");
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = flat[static_cast<std::size_t>(r * cols + c)];
  return m;
}

std::vector<double> vec_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector vec_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

nlohmann::json params_to_json(const ModelParams& p) {
  nlohmann::json j;
  j["n_x"] = p.n_x;
  j["j"] = p.j;
  j["eps"] = p.eps;
  j["f_x"] = p.f_x;
  j["f_y"] = p.f_y;
  j["lambda_x"] = p.lambda_x;
  j["lambda_y"] = p.lambda_y;
  j["rescale_x"] = {{"mean", p.rescale_x.mean}, {"beta", p.rescale_x.beta}};
  j["rescale_y"] = {{"mean", p.rescale_y.mean}, {"beta", p.rescale_y.beta}};
  return j;
}

ModelParams params_from_json(const nlohmann::json& j) {
  ModelParams p;
  p.n_x = j.at("n_x").get<int>();
  p.j = j.at("j").get<int>();
  p.eps = j.at("eps").get<double>();
  p.f_x = j.at("f_x").get<double>();
  p.f_y = j.at("f_y").get<double>();
  p.lambda_x = j.at("lambda_x").get<double>();
  p.lambda_y = j.at("lambda_y").get<double>();
  if (j.contains("rescale_x")) {
    p.rescale_x.mean = j["rescale_x"].at("mean").get<double>();
    p.rescale_x.beta = j["rescale_x"].at("beta").get<double>();
  }
  if (j.contains("rescale_y")) {
    p.rescale_y.mean = j["rescale_y"].at("mean").get<double>();
    p.rescale_y.beta = j["rescale_y"].at("beta").get<double>();
  }
  return p;
}

nlohmann::json closure_to_json(const ClosureData& c) {
  nlohmann::json j;
  j["params"] = params_to_json(c.params);
  j["x_star"] = vec_std(c.x_star);
  j["z_bar_star"] = vec_std(c.z_bar_star);
  j["sigma_star"] = matrix_to_json(c.sigma_star);
  j["r_star"] = matrix_to_json(c.r_star);
  j["b_star"] = vec_std(c.b_star);
  j["c_star"] = matrix_to_json(c.c_star);
  j["provenance"] = {{"t_av", c.t_av}, {"t_corr", c.t_corr}, {"dt", c.dt_sample}, {"seed", c.seed}};
  return j;
}

ClosureData closure_from_json(const nlohmann::json& j) {
  ClosureData c;
  c.params = params_from_json(j.at("params"));
  c.x_star = vec_eigen(j.at("x_star").get<std::vector<double>>());
  c.z_bar_star = vec_eigen(j.at("z_bar_star").get<std::vector<double>>());
  c.sigma_star = matrix_from_json(j.at("sigma_star"));
  c.r_star = matrix_from_json(j.at("r_star"));
  c.b_star = vec_eigen(j.at("b_star").get<std::vector<double>>());
  c.c_star = matrix_from_json(j.at("c_star"));
  const auto& prov = j.at("provenance");
  c.t_av = prov.at("t_av").get<double>();
  c.t_corr = prov.at("t_corr").get<double>();
  c.dt_sample = prov.at("dt").get<double>();
  c.seed = prov.at("seed").get<std::uint64_t>();
  return c;
}

void write_closure_json(const ClosureData& c, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << closure_to_json(c).dump(1) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

ClosureData read_closure_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  nlohmann::json j;
  in >> j;
  return closure_from_json(j);
}

}  // namespace l96
