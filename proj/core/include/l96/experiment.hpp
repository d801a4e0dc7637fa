#pragma once

#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "l96/closure.hpp"
#include "l96/integrator.hpp"
#include "l96/model.hpp"
#include "l96/stats.hpp"

namespace l96 {

// Comparison grids shared by every model variant in a regime, so the L2
// distances are well-defined.
inline constexpr double kPdfLo = -5.0;
inline constexpr double kPdfHi = 5.0;
inline constexpr int kPdfBins = 200;
inline constexpr double kCorrWindow = 20.0;

enum class XStarMode { ZeroVector, FromFullModelMean, FromFile };

struct CalibrationSettings {
  int n = 40;
  double t_total = 10000.0;
  double dt = 5e-3;
  double spin_up = 100.0;
};

/// Per-system integration settings; durations come from t_stats / t_av.
struct StagePlans {
  IntegrationPlan full{1e-4, 100.0, 0.0, 500, 0};
  IntegrationPlan fast{5e-3, 100.0, 0.0, 10, 0};
  IntegrationPlan reduced{5e-3, 100.0, 0.0, 10, 0};
  CalibrationSettings calibration;
};

struct RegimeSpec {
  ModelParams params;
  bool calibrate_rescale = true;  // false when params carry precomputed constants
  double t_av = 10000.0;
  double t_corr = 50.0;
  double t_stats = 5000.0;
  StagePlans plans;
  XStarMode x_star_mode = XStarMode::FromFullModelMean;
  std::string x_star_file;
  double x_star_duration = 2000.0;
  std::uint64_t seed = 1;

  std::string id() const;  // encodes (lambda, f_x, f_y)
  void validate() const;
};

struct ScalarMoments {
  double mean = 0.0;
  double variance = 0.0;
};

struct DiagnosticsSet {
  Histogram pdf;
  LagCurve acf, ccf, kcf;
  ScalarMoments moments;
};

struct RegimeResult {
  RegimeSpec spec;
  ClosureData closure;
  DiagnosticsSet full, reduced, zero_order;
  /// Keys "<diagnostic>.<variant>": pdf/acf/ccf/kcf x reduced/zero_order.
  std::map<std::string, double> errors;
  std::map<std::string, double> timings;  // seconds per stage; not persisted in summary
};

/// The frozen slow state x* per the spec'd mode. ZeroVector returns zeros
/// (the rescaled slow mean is near 0); FromFullModelMean integrates the full
/// two-scale model for x_star_duration and returns per-index time means;
/// FromFile loads a JSON vector. params must already carry rescale constants
/// for the full-model mode.
Vector estimate_x_star(const RegimeSpec& spec);

/// Runs the calibration stage when the spec asks for it; returns the spec
/// with rescale constants filled in.
RegimeSpec calibrate_regime(RegimeSpec spec);

/// Stages 1-4 of the regime pipeline: calibration, x* estimation, fast
/// limiting stream, quasi-Gaussian closure.
ClosureData build_regime_closure(const RegimeSpec& spec);

/// The complete three-system comparison for one regime: calibrate, estimate
/// x*, build the closure from the fast limiting stream, integrate full /
/// reduced / zero-order for t_stats, compute the four diagnostics and the
/// eight L2 errors, and persist everything under out_dir/<regime-id>/.
RegimeResult run_regime(const RegimeSpec& spec, const std::filesystem::path& out_dir);

struct RegimeOutcome {
  std::string id;
  bool ok = false;
  std::string error;
  std::map<std::string, double> errors;
  // regime coordinates for table layout
  double lambda = 0.0, f_x = 0.0, f_y = 0.0;
};

struct SuiteSummary {
  std::vector<RegimeOutcome> regimes;  // sorted by id
};

/// Runs regimes (parallel across regimes when jobs > 1); per-regime failures
/// are recorded and the suite continues. Writes suite_summary.json and
/// tables.txt under out_dir.
SuiteSummary run_suite(const std::vector<RegimeSpec>& specs, int jobs,
                       const std::filesystem::path& out_dir);

/// Consolidated table in the paper's layout: one table per diagnostic,
/// blocks by (lambda, f_y), rows f_x, columns Red. / Z.O.
std::string format_tables(const SuiteSummary& summary);

/// Rebuilds a SuiteSummary from persisted per-regime summary.json files.
SuiteSummary load_suite_summaries(const std::filesystem::path& dir);

// JSON wire formats. The regime document mirrors RegimeSpec field-for-field.
nlohmann::json regime_spec_to_json(const RegimeSpec& spec);
RegimeSpec regime_spec_from_json(const nlohmann::json& j);
RegimeSpec read_regime_spec(const std::filesystem::path& path);
nlohmann::json summary_to_json(const RegimeResult& r);

/// The eight dynamical regimes studied in the source material:
/// lambda in {0.3, 0.4} x f_x in {6, 16} x f_y in {8, 12}, n_x=20, j=4,
/// eps=0.01. Seeds are split deterministically from master_seed.
std::vector<RegimeSpec> paper_regimes(std::uint64_t master_seed, double t_stats = 5000.0);

}  // namespace l96
