#pragma once

#include "spotvol/parallel.hpp"
#include "spotvol/simulate.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace spotvol {

struct Scenario {
  int days = 21;
  int per_hour = 60; // observations per trading hour (6.5 hours per day)
  double rho = 0.0;

  int increments() const;           // days * 6.5 * per_hour
  double horizon() const;           // days / 252
  std::string label() const;
};

struct HestonParams {
  double kappa = 5.0;
  double theta = 0.04;
  double xi = 0.5;
  double mu_alpha = 0.05;
  double mu_beta = -0.5;
  double x0 = 1.0;
  double v0 = 0.04;
  int substeps = 10;

  //! xi_override < 0 keeps this struct's xi.
  HestonConfig to_config(const Scenario& sc, double xi_override) const;
};

struct ExperimentConfig {
  std::string kind = "mase"; // "mase" or "volvol"
  std::vector<Scenario> scenarios;
  int paths = 500;
  std::uint64_t seed = 20240901;
  double trim = 0.1;
  int threads = 0; // 0: hardware concurrency
  HestonParams heston;
  std::vector<double> xis = { 0.5 };                    // volvol experiments
  std::vector<std::string> kernels = { "exponential" }; // mase experiments
  std::vector<std::string> methods = { "plugin:2" };
  std::string cv_grid; // "lo:hi:count" absolute; empty = relative default
  bool keep_per_path = false;
};

//! Plain-text config with [section] headers and key = value lines; unknown
//! sections or keys raise ConfigError. Repeated [scenario] sections add rows.
ExperimentConfig parse_experiment_config(std::istream& in);
ExperimentConfig parse_experiment_config_file(const std::string& filename);

struct MaseRow {
  Scenario scenario;
  std::string kernel;
  std::string method;
  double mase = 0.0;
  double se = 0.0;
  int failed = 0;
  int fallbacks = 0; // plug-in kept h_init after a degenerate TSRVV
  std::vector<double> per_path_ase; // populated when keep_per_path is set
};

struct VolVolRow {
  Scenario scenario;
  double xi_true = 0.0;
  double bias = 0.0;
  double stddev = 0.0;
  double rmse = 0.0;
  double se = 0.0; // Monte Carlo standard error of the bias
  int failed = 0;
  std::vector<double> per_path_xi;
};

struct ExperimentReport {
  std::string kind;
  std::vector<MaseRow> mase_rows;
  std::vector<VolVolRow> volvol_rows;
  std::map<std::string, std::string> metadata;         // deterministic
  std::map<std::string, std::string> runtime_metadata; // excluded from bodies

  //! CSV with "# metadata:" comment headers; runtime lines ("# runtime:")
  //! are emitted only when include_runtime is set.
  void write_csv(std::ostream& out, bool include_runtime = true) const;
  std::string body() const; // deterministic portion, for byte comparisons
};

//! Monte Carlo MASE study over scenario x kernel x bandwidth-method cells.
//! Per-path seeds derive from (seed, scenario, path); reductions run in fixed
//! order, so reports are invariant to the worker count. Failed paths are
//! excluded and counted (fail-soft).
ExperimentReport run_mase(const ExperimentConfig& cfg);

//! Monte Carlo vol-of-vol study: plug-in bandwidth, TSRVV, xi-hat per path.
ExperimentReport run_volvol(const ExperimentConfig& cfg);

} // namespace spotvol
