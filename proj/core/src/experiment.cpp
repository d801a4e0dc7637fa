#include "l96/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

namespace l96 {

namespace {

std::string trim_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// Stage indices for deterministic per-stage seed splitting.
enum Stage : std::uint64_t {
  kSeedCalX = 1,
  kSeedCalY = 2,
  kSeedXStar = 3,
  kSeedFast = 4,
  kSeedFull = 5,
  kSeedReduced = 6,
  kSeedZeroOrder = 7,
};

class StageTimer {
 public:
  explicit StageTimer(std::map<std::string, double>& sink) : sink_(sink) {}
  template <class F>
  auto time(const std::string& name, F&& f) -> decltype(f()) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      if constexpr (std::is_void_v<decltype(f())>) {
        f();
        sink_[name] = elapsed(t0);
      } else {
        auto out = f();
        sink_[name] = elapsed(t0);
        return out;
      }
    } catch (const BlowUpError& e) {
      throw BlowUpError("stage " + name + ": " + e.what(), e.time);
    } catch (const std::exception& e) {
      throw Error("stage " + name + ": " + e.what());
    }
  }

 private:
  static double elapsed(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  std::map<std::string, double>& sink_;
};

DiagnosticsSet compute_diagnostics(const SampleSeries& slow) {
  DiagnosticsSet d;
  d.pdf = histogram_pdf(std::span<const double>(slow.data), kPdfLo, kPdfHi, kPdfBins);
  d.acf = autocorrelation(slow, kCorrWindow);
  d.ccf = cross_correlation(slow, kCorrWindow);
  d.kcf = energy_autocorrelation(slow, kCorrWindow);
  double s1 = 0.0, s2 = 0.0;
  for (double v : slow.data) {
    s1 += v;
    s2 += v * v;
  }
  const double n = static_cast<double>(slow.data.size());
  d.moments.mean = s1 / n;
  d.moments.variance = s2 / n - d.moments.mean * d.moments.mean;
  return d;
}

const char* mode_name(XStarMode m) {
  switch (m) {
    case XStarMode::ZeroVector: return "zero-vector";
    case XStarMode::FromFullModelMean: return "from-full-model-mean";
    case XStarMode::FromFile: return "from-file";
  }
  return "?";
}

XStarMode mode_from_name(const std::string& s) {
  if (s == "zero-vector") return XStarMode::ZeroVector;
  if (s == "from-full-model-mean") return XStarMode::FromFullModelMean;
  if (s == "from-file") return XStarMode::FromFile;
  throw IoError("unknown x_star_mode: " + s);
}

nlohmann::json plan_to_json(const IntegrationPlan& p) {
  return {{"dt", p.dt}, {"spin_up", p.spin_up}, {"sample_every", p.sample_every}};
}

void plan_from_json(const nlohmann::json& j, IntegrationPlan& p) {
  if (j.contains("dt")) p.dt = j["dt"].get<double>();
  if (j.contains("spin_up")) p.spin_up = j["spin_up"].get<double>();
  if (j.contains("sample_every")) p.sample_every = j["sample_every"].get<int>();
}

}  // namespace

std::string RegimeSpec::id() const {
  std::ostringstream out;
  if (params.lambda_x == params.lambda_y) {
    out << "lam" << trim_num(params.lambda_x);
  } else {
    out << "lamx" << trim_num(params.lambda_x) << "_lamy" << trim_num(params.lambda_y);
  }
  out << "_fx" << trim_num(params.f_x) << "_fy" << trim_num(params.f_y);
  return out.str();
}

void RegimeSpec::validate() const {
  params.validate();
  if (!(t_stats > kCorrWindow))
    throw Error("RegimeSpec: t_stats must exceed the correlation window (20)");
  if (!(t_av >= t_corr)) throw Error("RegimeSpec: need t_av >= t_corr");
  if (!(t_corr > 0.0)) throw Error("RegimeSpec: t_corr must be positive");
  plans.full.validate();
  plans.fast.validate();
  plans.reduced.validate();
  if (x_star_mode == XStarMode::FromFile && x_star_file.empty())
    throw Error("RegimeSpec: from-file mode needs x_star_file");
}

Vector estimate_x_star(const RegimeSpec& spec) {
  const ModelParams& p = spec.params;
  switch (spec.x_star_mode) {
    case XStarMode::ZeroVector:
      return Vector::Zero(p.n_x);
    case XStarMode::FromFile: {
      std::ifstream in(spec.x_star_file);
      if (!in) throw IoError("cannot open x_star file: " + spec.x_star_file);
      nlohmann::json j;
      in >> j;
      std::vector<double> v;
      if (j.is_array()) {
        v = j.get<std::vector<double>>();
      } else if (j.contains("x_star")) {
        v = j["x_star"].get<std::vector<double>>();
      } else {
        throw IoError("x_star file must be an array or contain \"x_star\"");
      }
      if (static_cast<int>(v.size()) != p.n_x)
        throw DimensionError("x_star file has length " + std::to_string(v.size()) +
                             ", expected " + std::to_string(p.n_x));
      return Eigen::Map<const Vector>(v.data(), p.n_x);
    }
    case XStarMode::FromFullModelMean: {
      p.validate();
      TwoScaleSystem sys(p);
      IntegrationPlan plan = spec.plans.full;
      plan.duration = spec.x_star_duration;
      plan.sample_every = 1;
      Vector s0 = perturbed_state(p.dim_full(), 0.0, 0.5, split_seed(spec.seed, kSeedXStar));
      double acc = 0.0;
      long long count = 0;
      integrate_observe(sys, s0, plan, [&](double, const Vector& s) {
        acc += s.head(p.n_x).sum();
        count += p.n_x;
      });
      // The long-term mean state is uniform across indices by translational
      // invariance, so pooling over indices estimates the same vector with
      // less variance, and the uniform x* keeps the fast limiting dynamics
      // exactly shift-invariant for the closure estimator.
      return Vector::Constant(p.n_x, acc / static_cast<double>(count));
    }
  }
  throw Error("estimate_x_star: bad mode");
}

RegimeSpec calibrate_regime(RegimeSpec spec) {
  if (!spec.calibrate_rescale) return spec;
  CalibrationPlan cal;
  cal.n = spec.plans.calibration.n;
  cal.t_total = spec.plans.calibration.t_total;
  cal.dt = spec.plans.calibration.dt;
  cal.spin_up = spec.plans.calibration.spin_up;
  cal.seed = split_seed(spec.seed, kSeedCalX);
  spec.params.rescale_x = calibrate(spec.params.f_x, cal);
  cal.seed = split_seed(spec.seed, kSeedCalY);
  spec.params.rescale_y = calibrate(spec.params.f_y, cal);
  spec.calibrate_rescale = false;
  return spec;
}

namespace {

// Closure from the fast limiting stream. The run covers t_av + t_corr so
// that the shared tau-window spans exactly t_av. A uniform x* makes the
// stream's statistics invariant under every cyclic shift of the fast ring,
// so the circulant projection applies.
ClosureData closure_stage(const RegimeSpec& spec, const Vector& x_star) {
  const ModelParams& p = spec.params;
  FastLimitingSystem fast(p, x_star);
  IntegrationPlan plan = spec.plans.fast;
  plan.duration = spec.t_av + spec.t_corr;
  const double dt_sample = plan.dt_sample();
  const int m_lags = static_cast<int>(std::floor(spec.t_corr / dt_sample + 1e-9));
  ClosureAccumulator acc(p.n_y(), m_lags, 1, dt_sample);
  Vector z0 = perturbed_state(p.n_y(), 0.0, 0.5, split_seed(spec.seed, kSeedFast));
  integrate_observe(fast, z0, plan, [&](double, const Vector& z) { acc.push(z); });
  const bool uniform_x = x_star.maxCoeff() == x_star.minCoeff();
  ClosureData c = build_closure(acc, x_star, p, false, uniform_x ? 1 : 0);
  c.seed = spec.seed;
  return c;
}

}  // namespace

ClosureData build_regime_closure(const RegimeSpec& spec_in) {
  RegimeSpec spec = calibrate_regime(spec_in);
  spec.validate();
  Vector x_star = estimate_x_star(spec);
  return closure_stage(spec, x_star);
}

RegimeResult run_regime(const RegimeSpec& spec_in, const std::filesystem::path& out_dir) {
  RegimeSpec spec = spec_in;
  spec.validate();
  RegimeResult result;
  StageTimer timer(result.timings);

  spec = timer.time("calibrate", [&] { return calibrate_regime(spec); });
  const ModelParams& p = spec.params;
  result.spec = spec;

  Vector x_star = timer.time("x_star", [&] { return estimate_x_star(spec); });
  result.closure = timer.time("closure", [&] { return closure_stage(spec, x_star); });

  SampleSeries full_slow = timer.time("full_model", [&] {
    TwoScaleSystem sys(p);
    IntegrationPlan plan = spec.plans.full;
    plan.duration = spec.t_stats;
    Vector s0 = perturbed_state(p.dim_full(), 0.0, 0.5, split_seed(spec.seed, kSeedFull));
    SampleSeries slow;
    slow.dim = p.n_x;
    slow.dt_sample = plan.dt_sample();
    slow.t_start = plan.spin_up;
    slow.data.reserve(static_cast<std::size_t>(plan.sample_count()) * p.n_x);
    integrate_observe(sys, s0, plan, [&](double, const Vector& s) { slow.push(s.head(p.n_x)); });
    return slow;
  });

  auto run_reduced = [&](bool zero_order, std::uint64_t stage) {
    ReducedSystem sys(p, result.closure.x_star, result.closure.b_star, result.closure.c_star,
                      zero_order);
    IntegrationPlan plan = spec.plans.reduced;
    plan.duration = spec.t_stats;
    Vector s0 = perturbed_state(p.n_x, 0.0, 0.5, split_seed(spec.seed, stage));
    return integrate_sampled(sys, s0, plan);
  };
  SampleSeries reduced_slow =
      timer.time("reduced_model", [&] { return run_reduced(false, kSeedReduced); });
  SampleSeries zero_slow =
      timer.time("zero_order_model", [&] { return run_reduced(true, kSeedZeroOrder); });

  timer.time("diagnostics", [&] {
    result.full = compute_diagnostics(full_slow);
    result.reduced = compute_diagnostics(reduced_slow);
    result.zero_order = compute_diagnostics(zero_slow);
  });

  const std::pair<const char*, const DiagnosticsSet*> variants[] = {
      {"reduced", &result.reduced}, {"zero_order", &result.zero_order}};
  for (const auto& [name, diag] : variants) {
    result.errors[std::string("pdf.") + name] = l2_distance(result.full.pdf, diag->pdf);
    result.errors[std::string("acf.") + name] = l2_distance(result.full.acf, diag->acf);
    result.errors[std::string("ccf.") + name] = l2_distance(result.full.ccf, diag->ccf);
    result.errors[std::string("kcf.") + name] = l2_distance(result.full.kcf, diag->kcf);
  }

  timer.time("persist", [&] {
    namespace fs = std::filesystem;
    const fs::path dir = out_dir / spec.id();
    fs::create_directories(dir / "curves");
    write_closure_json(result.closure, dir / "closure.json");

    const std::pair<const char*, const DiagnosticsSet*> systems[] = {
        {"full", &result.full}, {"reduced", &result.reduced}, {"zero_order", &result.zero_order}};
    for (const auto& [name, diag] : systems) {
      const std::string prefix = std::string(name) + "_";
      write_histogram_csv(diag->pdf, dir / "curves" / (prefix + "pdf.csv"), "pdf", spec.id(), name);
      write_curve_csv(diag->acf, dir / "curves" / (prefix + "acf.csv"), "acf", spec.id(), name);
      write_curve_csv(diag->ccf, dir / "curves" / (prefix + "ccf.csv"), "ccf", spec.id(), name);
      write_curve_csv(diag->kcf, dir / "curves" / (prefix + "kcf.csv"), "kcf", spec.id(), name);
    }

    std::ofstream sum(dir / "summary.json");
    if (!sum) throw IoError("cannot write summary.json");
    sum << summary_to_json(result).dump(1) << '\n';

    nlohmann::json jt(result.timings);
    std::ofstream tim(dir / "timings.json");
    tim << jt.dump(1) << '\n';
  });

  return result;
}

SuiteSummary run_suite(const std::vector<RegimeSpec>& specs, int jobs,
                       const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<RegimeOutcome> outcomes(specs.size());

  auto run_one = [&](std::size_t idx) {
    RegimeOutcome& o = outcomes[idx];
    o.id = specs[idx].id();
    try {
      RegimeResult r = run_regime(specs[idx], out_dir);
      o.ok = true;
      o.errors = r.errors;
    } catch (const std::exception& e) {
      o.ok = false;
      o.error = e.what();
    }
  };

  if (jobs <= 1) {
    for (std::size_t i = 0; i < specs.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next.fetch_add(1); i < specs.size(); i = next.fetch_add(1)) run_one(i);
    };
    std::vector<std::thread> pool;
    const int n_threads = std::min<int>(jobs, static_cast<int>(specs.size()));
    pool.reserve(static_cast<std::size_t>(std::max(n_threads, 0)));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    outcomes[i].lambda = specs[i].params.lambda_x;
    outcomes[i].f_x = specs[i].params.f_x;
    outcomes[i].f_y = specs[i].params.f_y;
  }
  SuiteSummary summary;
  summary.regimes = std::move(outcomes);
  std::sort(summary.regimes.begin(), summary.regimes.end(),
            [](const RegimeOutcome& a, const RegimeOutcome& b) { return a.id < b.id; });

  nlohmann::json js;
  js["regimes"] = nlohmann::json::array();
  for (const auto& o : summary.regimes) {
    nlohmann::json jo;
    jo["id"] = o.id;
    jo["status"] = o.ok ? "ok" : "error";
    if (!o.ok) jo["error"] = o.error;
    jo["errors"] = nlohmann::json(o.errors);
    jo["lambda"] = o.lambda;
    jo["f_x"] = o.f_x;
    jo["f_y"] = o.f_y;
    js["regimes"].push_back(jo);
  }
  std::ofstream out(out_dir / "suite_summary.json");
  if (!out) throw IoError("cannot write suite_summary.json");
  out << js.dump(1) << '\n';

  const std::string tables = format_tables(summary);
  std::ofstream tf(out_dir / "tables.txt");
  tf << tables;
  return summary;
}

namespace {

const RegimeOutcome* find_regime(const SuiteSummary& s, double lambda, double fx, double fy) {
  for (const auto& o : s.regimes)
    if (o.lambda == lambda && o.f_x == fx && o.f_y == fy) return &o;
  return nullptr;
}

std::string cell(const RegimeOutcome* o, const std::string& key) {
  if (!o || !o->ok) return "-";
  auto it = o->errors.find(key);
  if (it == o->errors.end()) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", it->second);
  return buf;
}

}  // namespace

std::string format_tables(const SuiteSummary& summary) {
  static const std::pair<const char*, const char*> kDiagnostics[] = {
      {"pdf", "PDFs"},
      {"acf", "time autocorrelation functions"},
      {"ccf", "time cross-correlation functions"},
      {"kcf", "energy autocorrelation functions"},
  };
  const double lambdas[] = {0.3, 0.4};
  const double fys[] = {8.0, 12.0};
  const double fxs[] = {6.0, 16.0};

  std::ostringstream out;
  for (const auto& [key, title] : kDiagnostics) {
    out << "L2 errors between the " << title
        << " of the full two-scale model and the two reduced models\n";
    for (double lam : lambdas) {
      for (double fy : fys) {
        out << "  lambda=" << trim_num(lam) << ", F_y=" << trim_num(fy) << "\n";
        out << "             Red.        Z.O.\n";
        for (double fx : fxs) {
          const RegimeOutcome* o = find_regime(summary, lam, fx, fy);
          char label[16];
          std::snprintf(label, sizeof label, "  F_x=%-4s", trim_num(fx).c_str());
          out << label << "  " << cell(o, std::string(key) + ".reduced") << "   "
              << cell(o, std::string(key) + ".zero_order") << "\n";
        }
      }
    }
    out << "\n";
  }
  return out.str();
}

SuiteSummary load_suite_summaries(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  SuiteSummary s;
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_directory()) continue;
    const fs::path f = entry.path() / "summary.json";
    if (!fs::exists(f)) continue;
    std::ifstream in(f);
    nlohmann::json j;
    in >> j;
    RegimeOutcome o;
    o.id = j.at("regime").get<std::string>();
    o.ok = true;
    for (const auto& [k, v] : j.at("errors").items())
      for (const auto& [vk, vv] : v.items()) o.errors[k + "." + vk] = vv.get<double>();
    const auto& pj = j.at("spec").at("params");
    o.lambda = pj.at("lambda_x").get<double>();
    o.f_x = pj.at("f_x").get<double>();
    o.f_y = pj.at("f_y").get<double>();
    s.regimes.push_back(std::move(o));
  }
  std::sort(s.regimes.begin(), s.regimes.end(),
            [](const RegimeOutcome& a, const RegimeOutcome& b) { return a.id < b.id; });
  return s;
}

nlohmann::json regime_spec_to_json(const RegimeSpec& spec) {
  nlohmann::json j;
  nlohmann::json pj = params_to_json(spec.params);
  if (spec.calibrate_rescale) {
    pj.erase("rescale_x");
    pj.erase("rescale_y");
  }
  j["params"] = pj;
  j["t_av"] = spec.t_av;
  j["t_corr"] = spec.t_corr;
  j["t_stats"] = spec.t_stats;
  j["plans"] = {{"full", plan_to_json(spec.plans.full)},
                {"fast", plan_to_json(spec.plans.fast)},
                {"reduced", plan_to_json(spec.plans.reduced)},
                {"calibration",
                 {{"n", spec.plans.calibration.n},
                  {"t_total", spec.plans.calibration.t_total},
                  {"dt", spec.plans.calibration.dt},
                  {"spin_up", spec.plans.calibration.spin_up}}}};
  j["x_star_mode"] = mode_name(spec.x_star_mode);
  j["x_star_file"] = spec.x_star_file;
  j["x_star_duration"] = spec.x_star_duration;
  j["seed"] = spec.seed;
  return j;
}

RegimeSpec regime_spec_from_json(const nlohmann::json& j) {
  RegimeSpec spec;
  spec.params = params_from_json(j.at("params"));
  spec.calibrate_rescale = !j.at("params").contains("rescale_x");
  if (j.contains("t_av")) spec.t_av = j["t_av"].get<double>();
  if (j.contains("t_corr")) spec.t_corr = j["t_corr"].get<double>();
  if (j.contains("t_stats")) spec.t_stats = j["t_stats"].get<double>();
  if (j.contains("plans")) {
    const auto& pj = j["plans"];
    if (pj.contains("full")) plan_from_json(pj["full"], spec.plans.full);
    if (pj.contains("fast")) plan_from_json(pj["fast"], spec.plans.fast);
    if (pj.contains("reduced")) plan_from_json(pj["reduced"], spec.plans.reduced);
    if (pj.contains("calibration")) {
      const auto& cj = pj["calibration"];
      if (cj.contains("n")) spec.plans.calibration.n = cj["n"].get<int>();
      if (cj.contains("t_total")) spec.plans.calibration.t_total = cj["t_total"].get<double>();
      if (cj.contains("dt")) spec.plans.calibration.dt = cj["dt"].get<double>();
      if (cj.contains("spin_up")) spec.plans.calibration.spin_up = cj["spin_up"].get<double>();
    }
  }
  if (j.contains("x_star_mode")) spec.x_star_mode = mode_from_name(j["x_star_mode"].get<std::string>());
  if (j.contains("x_star_file")) spec.x_star_file = j["x_star_file"].get<std::string>();
  if (j.contains("x_star_duration")) spec.x_star_duration = j["x_star_duration"].get<double>();
  if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
  return spec;
}

RegimeSpec read_regime_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  nlohmann::json j;
  in >> j;
  return regime_spec_from_json(j);
}

nlohmann::json summary_to_json(const RegimeResult& r) {
  nlohmann::json j;
  j["regime"] = r.spec.id();
  j["spec"] = regime_spec_to_json(r.spec);

  nlohmann::json je;
  for (const char* diag : {"pdf", "acf", "ccf", "kcf"}) {
    je[diag] = {{"reduced", r.errors.at(std::string(diag) + ".reduced")},
                {"zero_order", r.errors.at(std::string(diag) + ".zero_order")}};
  }
  j["errors"] = je;

  const std::pair<const char*, const DiagnosticsSet*> systems[] = {
      {"full", &r.full}, {"reduced", &r.reduced}, {"zero_order", &r.zero_order}};
  nlohmann::json jm, jo;
  for (const auto& [name, d] : systems) {
    jm[name] = {{"mean", d->moments.mean}, {"variance", d->moments.variance}};
    jo[name] = d->pdf.out_of_range_fraction();
  }
  j["moments"] = jm;
  j["out_of_range_fraction"] = jo;
  j["closure_provenance"] = {{"t_av", r.closure.t_av},
                             {"t_corr", r.closure.t_corr},
                             {"dt", r.closure.dt_sample},
                             {"seed", r.closure.seed}};
  return j;
}

std::vector<RegimeSpec> paper_regimes(std::uint64_t master_seed, double t_stats) {
  std::vector<RegimeSpec> specs;
  int idx = 0;
  for (double lam : {0.3, 0.4}) {
    for (double fy : {8.0, 12.0}) {
      for (double fx : {6.0, 16.0}) {
        RegimeSpec s;
        s.params.n_x = 20;
        s.params.j = 4;
        s.params.eps = 0.01;
        s.params.f_x = fx;
        s.params.f_y = fy;
        s.params.lambda_x = lam;
        s.params.lambda_y = lam;
        s.t_stats = t_stats;
        s.seed = split_seed(master_seed, 1000 + static_cast<std::uint64_t>(idx));
        specs.push_back(std::move(s));
        ++idx;
      }
    }
  }
  return specs;
}

}  // namespace l96
