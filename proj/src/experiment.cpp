#include "spotvol/experiment.hpp"

#include "spotvol/parallel.hpp"

#include "spotvol/bandwidth.hpp"
#include "spotvol/covariance.hpp"
#include "spotvol/errors.hpp"
#include "spotvol/kernels.hpp"
#include "spotvol/volvol.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

namespace spotvol {

int Scenario::increments() const
{
  const double v = days * 6.5 * per_hour;
  const int n = static_cast<int>(std::lround(v));
  if (std::abs(v - n) > 1e-9)
    throw ConfigError("scenario: days * 6.5 * per_hour must be an integer");
  return n;
}

double Scenario::horizon() const
{
  return days / 252.0;
}

std::string Scenario::label() const
{
  std::ostringstream os;
  os << days << "d/" << per_hour << "ph/rho=" << rho;
  return os.str();
}

HestonConfig HestonParams::to_config(const Scenario& sc, double xi_override) const
{
  HestonConfig cfg;
  cfg.kappa = kappa;
  cfg.theta = theta;
  cfg.xi = xi_override >= 0.0 ? xi_override : xi; // xi = 0 is a valid request
  cfg.rho = sc.rho;
  cfg.mu = { mu_alpha, mu_beta };
  cfg.x0 = x0;
  cfg.v0 = v0;
  cfg.n = sc.increments();
  cfg.horizon = sc.horizon();
  cfg.substeps = substeps;
  return cfg;
}

namespace {

std::string strip(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s)
{
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string item;
  while (std::getline(is, item, ','))
    if (const std::string v = strip(item); !v.empty())
      out.push_back(v);
  return out;
}

double to_double(const std::string& v, const std::string& key)
{
  try {
    return std::stod(v);
  } catch (const std::exception&) {
    throw ConfigError("config: bad numeric value for '" + key + "'");
  }
}

int to_int(const std::string& v, const std::string& key)
{
  try {
    return std::stoi(v);
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer value for '" + key + "'");
  }
}

} // namespace

ExperimentConfig parse_experiment_config(std::istream& in)
{
  ExperimentConfig cfg;
  cfg.scenarios.clear();

  std::string section;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string s = strip(line);
    if (s.empty() || s[0] == '#' || s[0] == ';')
      continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": unterminated section header");
      section = strip(s.substr(1, s.size() - 2));
      if (section != "experiment" && section != "scenario" &&
          section != "heston" && section != "estimation")
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": unknown section [" + section + "]");
      if (section == "scenario")
        cfg.scenarios.push_back({});
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key = value");
    const std::string key = strip(s.substr(0, eq));
    const std::string val = strip(s.substr(eq + 1));

    if (section == "experiment") {
      if (key == "kind") {
        if (val != "mase" && val != "volvol")
          throw ConfigError("config: kind must be 'mase' or 'volvol'");
        cfg.kind = val;
      } else if (key == "paths") {
        cfg.paths = to_int(val, key);
      } else if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(std::stoull(val));
      } else if (key == "trim") {
        cfg.trim = to_double(val, key);
      } else if (key == "threads") {
        cfg.threads = to_int(val, key);
      } else {
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": unknown key '" + key + "' in [experiment]");
      }
    } else if (section == "scenario") {
      if (cfg.scenarios.empty())
        throw ConfigError("config: key outside a [scenario] section");
      Scenario& sc = cfg.scenarios.back();
      if (key == "days")
        sc.days = to_int(val, key);
      else if (key == "per_hour")
        sc.per_hour = to_int(val, key);
      else if (key == "rho")
        sc.rho = to_double(val, key);
      else
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": unknown key '" + key + "' in [scenario]");
    } else if (section == "heston") {
      if (key == "kappa")
        cfg.heston.kappa = to_double(val, key);
      else if (key == "theta")
        cfg.heston.theta = to_double(val, key);
      else if (key == "xi") {
        const auto items = split_list(val);
        cfg.xis.clear();
        for (const auto& x : items)
          cfg.xis.push_back(to_double(x, key));
        if (cfg.xis.empty())
          throw ConfigError("config: empty xi list");
        cfg.heston.xi = cfg.xis.front();
      } else if (key == "mu_alpha")
        cfg.heston.mu_alpha = to_double(val, key);
      else if (key == "mu_beta")
        cfg.heston.mu_beta = to_double(val, key);
      else if (key == "x0")
        cfg.heston.x0 = to_double(val, key);
      else if (key == "v0")
        cfg.heston.v0 = to_double(val, key);
      else if (key == "substeps")
        cfg.heston.substeps = to_int(val, key);
      else
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": unknown key '" + key + "' in [heston]");
    } else if (section == "estimation") {
      if (key == "kernels") {
        cfg.kernels = split_list(val);
      } else if (key == "bandwidth") {
        cfg.methods = split_list(val);
      } else if (key == "cv_grid") {
        cfg.cv_grid = val;
      } else {
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": unknown key '" + key + "' in [estimation]");
      }
    } else {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": key before any section header");
    }
  }
  if (cfg.scenarios.empty())
    cfg.scenarios.push_back({});
  if (cfg.paths < 1)
    throw ConfigError("config: paths must be >= 1");
  if (!(cfg.trim >= 0.0 && cfg.trim <= 0.4))
    throw ConfigError("config: trim must lie in [0, 0.4]");
  return cfg;
}

ExperimentConfig parse_experiment_config_file(const std::string& filename)
{
  std::ifstream in(filename);
  if (!in)
    throw ConfigError("cannot open config '" + filename + "'");
  return parse_experiment_config(in);
}

void parallel_units(int total, int threads,
                    const std::function<void(int)>& unit)
{
  if (total <= 0)
    return;
  unsigned workers = threads > 0 ? static_cast<unsigned>(threads)
                                 : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(total));
  std::atomic<int> next{ 0 };
  auto work = [&]() {
    for (;;) {
      const int u = next.fetch_add(1);
      if (u >= total)
        return;
      unit(u);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < workers; ++t)
    pool.emplace_back(work);
  work();
  for (auto& th : pool)
    th.join();
}

namespace {

// Deterministic pool over (scenario, path) work units.
void parallel_paths(int scenarios, int paths, int threads,
                    const std::function<void(int, int)>& unit)
{
  parallel_units(scenarios * paths, threads,
                 [&](int u) { unit(u / paths, u % paths); });
}

std::uint64_t stream_index(int scenario, int path)
{
  return (static_cast<std::uint64_t>(scenario) << 32) |
         static_cast<std::uint64_t>(path);
}

double trimmed_ase(const std::vector<double>& est,
                   const std::vector<double>& truth, int l)
{
  const int n = static_cast<int>(est.size()) - 1;
  long double acc = 0.0L;
  for (int i = l; i <= n - l; ++i) {
    const long double d = static_cast<long double>(est[i]) - truth[i];
    acc += d * d;
  }
  return static_cast<double>(acc / (n - 2 * l + 1));
}

struct MethodSpec {
  std::string name;
  enum class Kind { initial, plugin, cv, fixed, oracle } kind;
  int plugin_iters = 2;
  double fixed_h = 0.0;
};

MethodSpec parse_method(const std::string& name)
{
  MethodSpec m;
  m.name = name;
  if (name == "initial") {
    m.kind = MethodSpec::Kind::initial;
  } else if (name == "plugin" || name.rfind("plugin:", 0) == 0) {
    m.kind = MethodSpec::Kind::plugin;
    if (name.size() > 7)
      m.plugin_iters = std::stoi(name.substr(7));
    if (m.plugin_iters < 0)
      throw ConfigError("bad plug-in iteration count in '" + name + "'");
  } else if (name == "cv") {
    m.kind = MethodSpec::Kind::cv;
  } else if (name.rfind("fixed:", 0) == 0) {
    m.kind = MethodSpec::Kind::fixed;
    m.fixed_h = std::stod(name.substr(6));
    if (!(m.fixed_h > 0.0))
      throw ConfigError("bad fixed bandwidth in '" + name + "'");
  } else if (name == "oracle") {
    m.kind = MethodSpec::Kind::oracle;
  } else {
    throw ConfigError("unknown bandwidth method '" + name + "'");
  }
  return m;
}

std::vector<double> cv_grid_for(const std::string& cv_grid, double h_init)
{
  if (cv_grid.empty())
    return log_bandwidth_grid(h_init / 10.0, h_init * 10.0, 25);
  std::istringstream is(cv_grid);
  std::string lo, hi, count;
  if (!std::getline(is, lo, ':') || !std::getline(is, hi, ':') ||
      !std::getline(is, count, ':'))
    throw ConfigError("cv_grid must be 'lo:hi:count'");
  return log_bandwidth_grid(std::stod(lo), std::stod(hi), std::stoi(count));
}

std::string fmt(double v)
{
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

} // namespace

void ExperimentReport::write_csv(std::ostream& out, bool include_runtime) const
{
  for (const auto& [k, v] : metadata)
    out << "# metadata: " << k << "=" << v << "\n";
  if (include_runtime)
    for (const auto& [k, v] : runtime_metadata)
      out << "# runtime: " << k << "=" << v << "\n";
  if (kind == "mase") {
    out << "days,per_hour,rho,kernel,method,mase,se,failed,fallbacks\n";
    for (const auto& r : mase_rows)
      out << r.scenario.days << "," << r.scenario.per_hour << ","
          << fmt(r.scenario.rho) << "," << r.kernel << "," << r.method << ","
          << fmt(r.mase) << "," << fmt(r.se) << "," << r.failed << ","
          << r.fallbacks << "\n";
  } else {
    out << "days,per_hour,rho,xi,bias,std,rmse,se,failed\n";
    for (const auto& r : volvol_rows)
      out << r.scenario.days << "," << r.scenario.per_hour << ","
          << fmt(r.scenario.rho) << "," << fmt(r.xi_true) << ","
          << fmt(r.bias) << "," << fmt(r.stddev) << "," << fmt(r.rmse) << ","
          << fmt(r.se) << "," << r.failed << "\n";
  }
}

std::string ExperimentReport::body() const
{
  std::ostringstream os;
  write_csv(os, false);
  return os.str();
}

ExperimentReport run_mase(const ExperimentConfig& cfg)
{
  const auto t_start = std::chrono::steady_clock::now();
  const CovStructure cov = CovStructure::brownian_min();

  std::vector<Kernel> kernels;
  for (const auto& name : cfg.kernels)
    kernels.push_back(kernel_by_name(name));
  std::vector<MethodSpec> methods;
  for (const auto& name : cfg.methods)
    methods.push_back(parse_method(name));

  const int s_count = static_cast<int>(cfg.scenarios.size());
  const int cells = static_cast<int>(kernels.size() * methods.size());
  constexpr double kFail = std::numeric_limits<double>::quiet_NaN();

  // ase[scenario][cell][path]; fallback marks offset by +1 in a parallel array
  std::vector<std::vector<std::vector<double>>> ase(
    s_count, std::vector<std::vector<double>>(
               cells, std::vector<double>(cfg.paths, kFail)));
  std::vector<std::vector<std::vector<char>>> fell(
    s_count, std::vector<std::vector<char>>(
               cells, std::vector<char>(cfg.paths, 0)));

  parallel_paths(s_count, cfg.paths, cfg.threads, [&](int s, int p) {
    const Scenario& sc = cfg.scenarios[s];
    RngStream rng(cfg.seed, stream_index(s, p));
    SimulatedPath sim;
    try {
      sim = simulate_heston(cfg.heston.to_config(sc, cfg.heston.xi), rng);
    } catch (const std::exception&) {
      return; // whole work unit fails; every cell stays NaN
    }
    const int l = static_cast<int>(std::floor(cfg.trim * sim.path.n()));
    for (std::size_t ki = 0; ki < kernels.size(); ++ki) {
      for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        const int cell = static_cast<int>(ki * methods.size() + mi);
        try {
          const Kernel& kernel = kernels[ki];
          const MethodSpec& method = methods[mi];
          double h = 0.0;
          bool fallback = false;
          switch (method.kind) {
          case MethodSpec::Kind::initial:
            h = initial_bandwidth(sim.path.n(), sim.path.horizon, kernel, cov);
            break;
          case MethodSpec::Kind::plugin: {
            PluginOptions opt;
            opt.max_iter = method.plugin_iters;
            try {
              h = plugin_select(sim.path, kernel, cov, opt).first.h;
            } catch (const VolVolDegenerate&) {
              h = initial_bandwidth(sim.path.n(), sim.path.horizon, kernel, cov);
              fallback = true;
            }
            break;
          }
          case MethodSpec::Kind::cv: {
            const double h0 =
              initial_bandwidth(sim.path.n(), sim.path.horizon, kernel, cov);
            h = cross_validate(sim.path, kernel,
                               cv_grid_for(cfg.cv_grid, h0), cfg.trim).h;
            break;
          }
          case MethodSpec::Kind::fixed:
            h = method.fixed_h;
            break;
          case MethodSpec::Kind::oracle: {
            const double g2 = cfg.heston.xi * cfg.heston.xi * sim.true_iv;
            h = optimal_bandwidth_global(sim.path.n(), sim.path.horizon,
                                         { sim.true_iq, g2 }, kernel, cov);
            break;
          }
          }
          const SpotVolSeries est = spot_vol_grid(sim.path, kernel, h, true);
          ase[s][cell][p] = trimmed_ase(est.estimates, sim.true_var, l);
          fell[s][cell][p] = fallback ? 1 : 0;
        } catch (const std::exception&) {
          // fail-soft: cell stays NaN and is counted as failed
        }
      }
    }
  });

  ExperimentReport report;
  report.kind = "mase";
  report.metadata["kind"] = "mase";
  report.metadata["paths"] = std::to_string(cfg.paths);
  report.metadata["seed"] = std::to_string(cfg.seed);
  report.metadata["trim"] = fmt(cfg.trim);
  for (int s = 0; s < s_count; ++s) {
    for (std::size_t ki = 0; ki < kernels.size(); ++ki) {
      for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        const int cell = static_cast<int>(ki * methods.size() + mi);
        MaseRow row;
        row.scenario = cfg.scenarios[s];
        row.kernel = cfg.kernels[ki];
        row.method = methods[mi].name;
        long double sum = 0.0L;
        int used = 0;
        for (int p = 0; p < cfg.paths; ++p) {
          const double v = ase[s][cell][p];
          if (std::isnan(v)) {
            ++row.failed;
            continue;
          }
          sum += v;
          ++used;
          row.fallbacks += fell[s][cell][p];
          if (cfg.keep_per_path)
            row.per_path_ase.push_back(v);
        }
        if (used > 0) {
          row.mase = static_cast<double>(sum / used);
          long double var = 0.0L;
          for (int p = 0; p < cfg.paths; ++p) {
            const double v = ase[s][cell][p];
            if (std::isnan(v))
              continue;
            const long double d = v - row.mase;
            var += d * d;
          }
          row.se = used > 1 ? std::sqrt(static_cast<double>(var) / (used - 1) /
                                        used)
                            : 0.0;
        }
        report.mase_rows.push_back(std::move(row));
      }
    }
  }
  const auto dt = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t_start).count();
  report.runtime_metadata["runtime_seconds"] = fmt(dt);
  return report;
}

ExperimentReport run_volvol(const ExperimentConfig& cfg)
{
  const auto t_start = std::chrono::steady_clock::now();
  const CovStructure cov = CovStructure::brownian_min();
  const Kernel kernel = kernel_by_name(
    cfg.kernels.empty() ? "exponential" : cfg.kernels.front());

  const int s_count = static_cast<int>(cfg.scenarios.size());
  const int x_count = static_cast<int>(cfg.xis.size());
  constexpr double kFail = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<std::vector<double>>> xi_hat(
    s_count, std::vector<std::vector<double>>(
               x_count, std::vector<double>(cfg.paths, kFail)));

  parallel_paths(s_count, cfg.paths, cfg.threads, [&](int s, int p) {
    const Scenario& sc = cfg.scenarios[s];
    for (int xi_i = 0; xi_i < x_count; ++xi_i) {
      RngStream rng(cfg.seed,
                    stream_index(s, p) ^ (static_cast<std::uint64_t>(xi_i) << 56));
      try {
        const SimulatedPath sim =
          simulate_heston(cfg.heston.to_config(sc, cfg.xis[xi_i]), rng);
        const int n = sim.path.n();
        double h;
        try {
          h = plugin_select(sim.path, kernel, cov).first.h;
        } catch (const VolVolDegenerate&) {
          h = initial_bandwidth(n, sim.path.horizon, kernel, cov);
        }
        const VolVolEstimate vv =
          tsrvv(sim.path, kernel, h, default_k(n), default_b(n));
        xi_hat[s][xi_i][p] = heston_xi(vv.ivv, realized_variance(sim.path));
      } catch (const std::exception&) {
        // fail-soft
      }
    }
  });

  ExperimentReport report;
  report.kind = "volvol";
  report.metadata["kind"] = "volvol";
  report.metadata["paths"] = std::to_string(cfg.paths);
  report.metadata["seed"] = std::to_string(cfg.seed);
  for (int s = 0; s < s_count; ++s) {
    for (int xi_i = 0; xi_i < x_count; ++xi_i) {
      VolVolRow row;
      row.scenario = cfg.scenarios[s];
      row.xi_true = cfg.xis[xi_i];
      long double sum = 0.0L, sum2 = 0.0L;
      int used = 0;
      for (int p = 0; p < cfg.paths; ++p) {
        const double v = xi_hat[s][xi_i][p];
        if (std::isnan(v)) {
          ++row.failed;
          continue;
        }
        sum += v;
        sum2 += static_cast<long double>(v) * v;
        ++used;
        if (cfg.keep_per_path)
          row.per_path_xi.push_back(v);
      }
      if (used > 0) {
        const double mean = static_cast<double>(sum / used);
        row.bias = mean - row.xi_true;
        const double ex2 = static_cast<double>(sum2 / used);
        row.stddev = used > 1 ? std::sqrt(std::max(0.0, ex2 - mean * mean) *
                                          used / (used - 1.0))
                              : 0.0;
        row.rmse = std::sqrt(row.bias * row.bias + row.stddev * row.stddev);
        row.se = used > 0 ? row.stddev / std::sqrt(used) : 0.0;
      }
      report.volvol_rows.push_back(std::move(row));
    }
  }
  const auto dt = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t_start).count();
  report.runtime_metadata["runtime_seconds"] = fmt(dt);
  return report;
}

} // namespace spotvol
