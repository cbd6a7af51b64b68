#include "spotvol/asymptotics.hpp"
#include "spotvol/bandwidth.hpp"
#include "spotvol/covariance.hpp"
#include "spotvol/csv.hpp"
#include "spotvol/errors.hpp"
#include "spotvol/experiment.hpp"
#include "spotvol/kernel_optimizer.hpp"
#include "spotvol/kernels.hpp"
#include "spotvol/volvol.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

std::ofstream open_output(const std::string& path)
{
  std::ofstream out(path);
  if (!out)
    throw spotvol::DataError("cannot open output file '" + path + "'");
  return out;
}

// --bandwidth {plugin[:iters], cv, fixed:<h>, initial, oracle}
double resolve_bandwidth(const spotvol::PricePath& path,
                         const spotvol::Kernel& kernel,
                         const spotvol::CovStructure& cov,
                         const std::string& spec, const std::string& cv_grid,
                         double oracle_e_sigma4, double oracle_l_scale,
                         std::map<std::string, std::string>& meta)
{
  using namespace spotvol;
  if (spec == "initial") {
    return initial_bandwidth(path.n(), path.horizon, kernel, cov);
  }
  if (spec == "plugin" || spec.rfind("plugin:", 0) == 0) {
    PluginOptions opt;
    if (spec.size() > 7)
      opt.max_iter = std::stoi(spec.substr(7));
    try {
      auto [plan, series] = plugin_select(path, kernel, cov, opt);
      meta["plugin_iterations"] = std::to_string(plan.iterations);
      std::ostringstream hist;
      for (const auto& it : plan.history)
        hist << it.h << ";";
      meta["plugin_history_h"] = hist.str();
      return plan.h;
    } catch (const VolVolDegenerate&) {
      meta["plugin_degenerate"] = "kept_h_init";
      return initial_bandwidth(path.n(), path.horizon, kernel, cov);
    }
  }
  if (spec == "cv") {
    const double h0 = initial_bandwidth(path.n(), path.horizon, kernel, cov);
    std::vector<double> grid;
    if (cv_grid.empty()) {
      grid = log_bandwidth_grid(h0 / 10.0, h0 * 10.0, 25);
    } else {
      std::istringstream is(cv_grid);
      std::string lo, hi, count;
      if (!std::getline(is, lo, ':') || !std::getline(is, hi, ':') ||
          !std::getline(is, count))
        throw ConfigError("--cv-grid must be lo:hi:count");
      grid = log_bandwidth_grid(std::stod(lo), std::stod(hi), std::stoi(count));
    }
    const BandwidthPlan plan = cross_validate(path, kernel, grid);
    meta["cv_objective"] = std::to_string(plan.cv_objective);
    return plan.h;
  }
  if (spec.rfind("fixed:", 0) == 0) {
    const double h = std::stod(spec.substr(6));
    if (!(h > 0.0))
      throw ConfigError("--bandwidth fixed:<h> needs h > 0");
    return h;
  }
  if (spec == "oracle") {
    if (!(oracle_e_sigma4 > 0.0) || !(oracle_l_scale > 0.0))
      throw ConfigError("--bandwidth oracle needs --e-sigma4 and --l-scale");
    return optimal_bandwidth_global(path.n(), path.horizon,
                                    { oracle_e_sigma4, oracle_l_scale },
                                    kernel, cov);
  }
  throw ConfigError("unknown --bandwidth '" + spec + "'");
}

} // namespace

int main(int argc, char** argv)
{
  using namespace spotvol;
  CLI::App app{ "Nonparametric kernel estimation of spot volatility" };
  app.require_subcommand(1);

  // ---- simulate ----
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate a Heston path");
  int sim_days = 21, sim_per_hour = 60, sim_substeps = 10;
  double sim_rho = 0.0, sim_xi = 0.5, sim_kappa = 5.0, sim_theta = 0.04,
         sim_v0 = 0.04, sim_x0 = 1.0;
  std::uint64_t sim_seed = 1;
  std::string sim_out = "-";
  sim_cmd->add_option("--days", sim_days, "trading days");
  sim_cmd->add_option("--per-hour", sim_per_hour, "observations per hour");
  sim_cmd->add_option("--rho", sim_rho, "leverage correlation");
  sim_cmd->add_option("--xi", sim_xi, "vol of vol");
  sim_cmd->add_option("--kappa", sim_kappa, "mean reversion");
  sim_cmd->add_option("--theta", sim_theta, "long-run variance");
  sim_cmd->add_option("--v0", sim_v0, "initial variance");
  sim_cmd->add_option("--x0", sim_x0, "initial log price");
  sim_cmd->add_option("--substeps", sim_substeps, "fine steps per observation");
  sim_cmd->add_option("--seed", sim_seed, "rng seed");
  sim_cmd->add_option("--out", sim_out, "output CSV ('-' for stdout)");

  // ---- estimate ----
  auto* est_cmd = app.add_subcommand("estimate", "Estimate spot variance from CSV");
  std::string est_in, est_out = "-", est_kernel = "exponential",
              est_bandwidth = "plugin", est_cv_grid;
  double est_bands = 0.0, est_e_sigma4 = 0.0, est_l_scale = 0.0;
  bool est_no_boundary = false;
  est_cmd->add_option("--in", est_in, "input CSV (time,log_price)")->required();
  est_cmd->add_option("--out", est_out, "output CSV");
  est_cmd->add_option("--kernel", est_kernel, "kernel name");
  est_cmd->add_option("--bandwidth", est_bandwidth,
                      "plugin[:iters] | cv | fixed:<h> | initial | oracle");
  est_cmd->add_option("--cv-grid", est_cv_grid, "lo:hi:count (log grid)");
  est_cmd->add_option("--bands", est_bands, "confidence level, e.g. 0.95");
  est_cmd->add_option("--e-sigma4", est_e_sigma4, "oracle integrated quarticity");
  est_cmd->add_option("--l-scale", est_l_scale, "oracle integrated vol-of-vol");
  est_cmd->add_flag("--no-boundary-correction", est_no_boundary,
                    "disable the boundary normalizer");

  // ---- volvol ----
  auto* vv_cmd = app.add_subcommand("volvol", "TSRVV vol-of-vol from CSV");
  vv_cmd->set_help_flag("--help", "print help"); // frees -h for --h below
  std::string vv_in, vv_out = "-", vv_k = "auto", vv_h = "plugin",
              vv_kernel = "exponential";
  int vv_b = 0;
  vv_cmd->add_option("--in", vv_in, "input CSV (time,log_price)")->required();
  vv_cmd->add_option("--out", vv_out, "output CSV");
  vv_cmd->add_option("--kernel", vv_kernel, "kernel name");
  vv_cmd->add_option("--k", vv_k, "coarse scale: auto | <int>");
  vv_cmd->add_option("--b", vv_b, "boundary trim (0 = auto)");
  vv_cmd->add_option("--h", vv_h, "bandwidth: plugin | <real>");

  // ---- optimal-kernel ----
  auto* ok_cmd = app.add_subcommand("optimal-kernel",
                                    "Numerical optimal kernel for fBM gamma");
  double ok_gamma = 1.5;
  int ok_bins = 128, ok_restarts = 8;
  std::uint64_t ok_seed = 1;
  std::string ok_out = "-";
  ok_cmd->add_option("--gamma", ok_gamma, "exponent in [1, 2)")->required();
  ok_cmd->add_option("--bins", ok_bins, "step-kernel bins");
  ok_cmd->add_option("--restarts", ok_restarts, "random restarts");
  ok_cmd->add_option("--seed", ok_seed, "rng seed");
  ok_cmd->add_option("--out", ok_out, "output CSV");

  // ---- experiment ----
  auto* ex_cmd = app.add_subcommand("experiment", "Monte Carlo studies");
  std::string ex_kind, ex_config, ex_out = "-";
  int ex_threads = -1;
  ex_cmd->add_option("kind", ex_kind, "mase | volvol")->required();
  ex_cmd->add_option("--config", ex_config, "config file")->required();
  ex_cmd->add_option("--out", ex_out, "output CSV");
  ex_cmd->add_option("--threads", ex_threads, "worker threads (0 = auto)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    const CovStructure cov = CovStructure::brownian_min();

    if (*sim_cmd) {
      Scenario sc{ sim_days, sim_per_hour, sim_rho };
      HestonConfig cfg;
      cfg.kappa = sim_kappa;
      cfg.theta = sim_theta;
      cfg.xi = sim_xi;
      cfg.rho = sim_rho;
      cfg.v0 = sim_v0;
      cfg.x0 = sim_x0;
      cfg.n = sc.increments();
      cfg.horizon = sc.horizon();
      cfg.substeps = sim_substeps;
      RngStream rng(sim_seed);
      const SimulatedPath sim = simulate_heston(cfg, rng);
      std::map<std::string, std::string> meta{
        { "seed", std::to_string(sim_seed) },
        { "true_iv", std::to_string(sim.true_iv) },
        { "true_iq", std::to_string(sim.true_iq) }
      };
      if (sim_out == "-")
        write_simulated_csv(std::cout, sim, meta);
      else {
        auto out = open_output(sim_out);
        write_simulated_csv(out, sim, meta);
      }
      return kExitOk;
    }

    if (*est_cmd) {
      const PricePath path = read_price_csv_file(est_in);
      const Kernel kernel = kernel_by_name(est_kernel);
      std::map<std::string, std::string> meta{ { "kernel", kernel.id() } };
      const double h = resolve_bandwidth(path, kernel, cov, est_bandwidth,
                                         est_cv_grid, est_e_sigma4,
                                         est_l_scale, meta);
      meta["bandwidth"] = std::to_string(h);
      const SpotVolSeries series =
        spot_vol_grid(path, kernel, h, !est_no_boundary);

      ConfidenceBands bands;
      const ConfidenceBands* bands_ptr = nullptr;
      if (est_bands > 0.0) {
        double g_sq = 0.0;
        try {
          const int n = path.n();
          const VolVolEstimate vv =
            tsrvv(path, kernel, h, default_k(n), default_b(n));
          g_sq = vv.ivv / path.horizon; // integrated-average proxy
          meta["bands_g_sq"] = std::to_string(g_sq);
          meta["bands_g_sq_source"] = "tsrvv_integrated_average";
        } catch (const std::exception&) {
          meta["bands_g_sq_source"] = "zero_fallback";
        }
        bands = confidence_bands(series, est_bands, g_sq, kernel, cov, true);
        bands_ptr = &bands;
      }
      if (est_out == "-")
        write_spot_csv(std::cout, series, bands_ptr, meta);
      else {
        auto out = open_output(est_out);
        write_spot_csv(out, series, bands_ptr, meta);
      }
      return kExitOk;
    }

    if (*vv_cmd) {
      const PricePath path = read_price_csv_file(vv_in);
      const Kernel kernel = kernel_by_name(vv_kernel);
      const int n = path.n();
      double h;
      if (vv_h == "plugin") {
        try {
          h = plugin_select(path, kernel, cov).first.h;
        } catch (const VolVolDegenerate&) {
          h = initial_bandwidth(n, path.horizon, kernel, cov);
        }
      } else {
        h = std::stod(vv_h);
      }
      const int k = vv_k == "auto" ? default_k(n) : std::stoi(vv_k);
      const int b = vv_b > 0 ? vv_b : default_b(n);
      const VolVolEstimate vv = tsrvv(path, kernel, h, k, b);
      std::ostringstream os;
      os.precision(17);
      os << "ivv,k,b,fallback\n"
         << vv.ivv << "," << vv.k << "," << vv.b << ","
         << (vv.used_fallback ? 1 : 0) << "\n";
      if (vv_out == "-")
        std::cout << os.str();
      else
        open_output(vv_out) << os.str();
      return kExitOk;
    }

    if (*ok_cmd) {
      if (!(ok_gamma >= 1.0 && ok_gamma < 2.0))
        throw ConfigError("--gamma must lie in [1, 2)");
      const OptimizeResult res = optimize(ok_gamma, ok_bins, ok_restarts, ok_seed);
      if (ok_out == "-")
        write_step_kernel_csv(std::cout, res.kernel.to_kernel(), res.objective);
      else {
        auto out = open_output(ok_out);
        write_step_kernel_csv(out, res.kernel.to_kernel(), res.objective);
      }
      return kExitOk;
    }

    if (*ex_cmd) {
      if (ex_kind != "mase" && ex_kind != "volvol")
        throw ConfigError("experiment kind must be 'mase' or 'volvol'");
      ExperimentConfig cfg = parse_experiment_config_file(ex_config);
      cfg.kind = ex_kind;
      if (ex_threads >= 0)
        cfg.threads = ex_threads;
      const ExperimentReport report =
        ex_kind == "mase" ? run_mase(cfg) : run_volvol(cfg);
      if (ex_out == "-")
        report.write_csv(std::cout);
      else {
        auto out = open_output(ex_out);
        report.write_csv(out);
      }
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}
