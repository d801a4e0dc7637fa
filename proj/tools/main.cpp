// Command-line front end: calibrate / closure / run / suite / tables.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "l96/closure.hpp"
#include "l96/experiment.hpp"
#include "l96/integrator.hpp"
#include "l96/model.hpp"

namespace fs = std::filesystem;

namespace {

std::vector<l96::RegimeSpec> read_suite_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw l96::IoError("cannot open: " + path.string());
  nlohmann::json j;
  in >> j;
  const nlohmann::json& list = j.is_array() ? j : j.at("regimes");
  std::vector<l96::RegimeSpec> specs;
  for (const auto& rj : list) specs.push_back(l96::regime_spec_from_json(rj));
  return specs;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear-response closure toolkit for the rescaled two-scale Lorenz 96 model"};
  app.require_subcommand(1);

  // calibrate
  auto* cal_cmd = app.add_subcommand("calibrate", "Estimate rescale constants for one forcing");
  double forcing = 8.0;
  std::string cal_out;
  l96::CalibrationPlan cal_plan;
  cal_cmd->add_option("--forcing", forcing, "Forcing value F")->required();
  cal_cmd->add_option("--out", cal_out, "Output JSON file")->required();
  cal_cmd->add_option("--n", cal_plan.n, "System size");
  cal_cmd->add_option("--t-total", cal_plan.t_total, "Total integration time");
  cal_cmd->add_option("--dt", cal_plan.dt, "Integrator step");
  cal_cmd->add_option("--spin-up", cal_plan.spin_up, "Discarded initial duration");
  cal_cmd->add_option("--seed", cal_plan.seed, "RNG seed");

  // closure
  auto* clo_cmd = app.add_subcommand("closure", "Build the closure for one regime");
  std::string clo_regime, clo_out;
  clo_cmd->add_option("--regime", clo_regime, "Regime configuration JSON")->required();
  clo_cmd->add_option("--out", clo_out, "Output closure JSON")->required();

  // run
  auto* run_cmd = app.add_subcommand("run", "Run the three-system comparison for one regime");
  std::string run_regime_path, run_out;
  run_cmd->add_option("--regime", run_regime_path, "Regime configuration JSON")->required();
  run_cmd->add_option("--out", run_out, "Output directory")->required();

  // suite
  auto* suite_cmd = app.add_subcommand("suite", "Run a list of regimes and consolidate tables");
  std::string suite_config, suite_out;
  int jobs = 1;
  suite_cmd->add_option("--config", suite_config, "Suite configuration JSON")->required();
  suite_cmd->add_option("--jobs", jobs, "Parallel regime workers");
  suite_cmd->add_option("--out", suite_out, "Output directory")->required();

  // tables
  auto* tab_cmd = app.add_subcommand("tables", "Re-emit consolidated tables from summaries");
  std::string tab_in;
  tab_cmd->add_option("--in", tab_in, "Directory with per-regime results")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (cal_cmd->parsed()) {
      l96::RescaleConstants r = l96::calibrate(forcing, cal_plan);
      nlohmann::json j{{"forcing", forcing},
                       {"mean", r.mean},
                       {"beta", r.beta},
                       {"protocol",
                        {{"n", cal_plan.n},
                         {"t_total", cal_plan.t_total},
                         {"dt", cal_plan.dt},
                         {"spin_up", cal_plan.spin_up},
                         {"seed", cal_plan.seed}}}};
      std::ofstream out(cal_out);
      if (!out) throw l96::IoError("cannot write " + cal_out);
      out << j.dump(1) << '\n';
      std::cout << "forcing " << forcing << ": mean=" << r.mean << " beta=" << r.beta << "\n";
    } else if (clo_cmd->parsed()) {
      l96::RegimeSpec spec = l96::read_regime_spec(clo_regime);
      l96::ClosureData c = l96::build_regime_closure(spec);
      l96::write_closure_json(c, clo_out);
      std::cout << "closure written to " << clo_out << "\n";
    } else if (run_cmd->parsed()) {
      l96::RegimeSpec spec = l96::read_regime_spec(run_regime_path);
      l96::RegimeResult r = l96::run_regime(spec, run_out);
      std::cout << "regime " << spec.id() << " done\n";
      for (const auto& [k, v] : r.errors) std::cout << "  " << k << " = " << v << "\n";
    } else if (suite_cmd->parsed()) {
      auto specs = read_suite_config(suite_config);
      l96::SuiteSummary s = l96::run_suite(specs, jobs, suite_out);
      std::cout << l96::format_tables(s);
      for (const auto& o : s.regimes)
        if (!o.ok) std::cout << "FAILED " << o.id << ": " << o.error << "\n";
    } else if (tab_cmd->parsed()) {
      l96::SuiteSummary s = l96::load_suite_summaries(tab_in);
      std::cout << l96::format_tables(s);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
