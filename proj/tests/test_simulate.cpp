#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spotvol/estimator.hpp"
#include "spotvol/simulate.hpp"

#include <cmath>
#include <numeric>
#include <vector>

using namespace spotvol;

namespace {

struct MeanVar {
  double mean;
  double var;
  int count;
  double se_mean() const { return std::sqrt(var / count); }
};

MeanVar mean_var(const std::vector<double>& v)
{
  const int n = static_cast<int>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double var = 0.0;
  for (double x : v)
    var += (x - mean) * (x - mean);
  return { mean, var / (n - 1), n };
}

} // namespace

TEST_CASE("deterministic variance ODE limit (tiny xi)")
{
  // Feller forbids xi = 0 exactly; a tiny xi tracks the ODE solution.
  HestonConfig cfg;
  cfg.xi = 1e-6;
  cfg.v0 = 0.09;
  cfg.theta = 0.04;
  cfg.kappa = 3.0;
  cfg.n = 128;
  cfg.horizon = 0.5;
  cfg.substeps = 20;
  RngStream rng(7);
  const SimulatedPath sim = simulate_heston(cfg, rng);
  for (int i = 0; i <= cfg.n; i += 16) {
    const double t = sim.path.time(i);
    const double ode = cfg.theta + (cfg.v0 - cfg.theta) * std::exp(-cfg.kappa * t);
    CHECK(sim.true_var[i] == doctest::Approx(ode).epsilon(2e-3));
  }
}

TEST_CASE("Heston terminal mean matches the CIR closed form")
{
  HestonConfig cfg;
  cfg.n = 64;
  cfg.horizon = 0.25;
  cfg.substeps = 10;
  const int paths = 4000;
  std::vector<double> vT(paths), rv_minus_iv(paths);
  for (int p = 0; p < paths; ++p) {
    RngStream rng(12345, p);
    const SimulatedPath sim = simulate_heston(cfg, rng);
    vT[p] = sim.true_var.back();
    rv_minus_iv[p] = realized_variance(sim.path) - sim.true_iv;
  }
  const MeanVar mv = mean_var(vT);
  const double target = cir_mean(cfg.horizon, cfg.kappa, cfg.theta, cfg.v0);
  CHECK(std::abs(mv.mean - target) <= 3.0 * mv.se_mean());

  // RV is unbiased for the integrated variance (rho = 0)
  const MeanVar rv = mean_var(rv_minus_iv);
  CHECK(std::abs(rv.mean) <= 3.0 * rv.se_mean());
}

TEST_CASE("Heston paths report nonnegative variance and are reproducible")
{
  HestonConfig cfg;
  cfg.n = 200;
  cfg.horizon = 21.0 / 252.0;
  cfg.rho = -0.5;
  RngStream a(99, 3), b(99, 3), c(99, 4);
  const SimulatedPath s1 = simulate_heston(cfg, a);
  const SimulatedPath s2 = simulate_heston(cfg, b);
  const SimulatedPath s3 = simulate_heston(cfg, c);
  CHECK(s1.path.log_prices == s2.path.log_prices); // bitwise determinism
  CHECK(s1.true_var == s2.true_var);
  CHECK(s1.path.log_prices != s3.path.log_prices); // distinct stream index
  for (double v : s1.true_var)
    CHECK(v >= 0.0);
}

TEST_CASE("fGn: H = 1/2 reduces to white noise")
{
  RngStream rng(5);
  const int n = 4096;
  const std::vector<double> inc = simulate_fbm(0.5, n, 1.0, rng);
  REQUIRE(static_cast<int>(inc.size()) == n);
  double mean = std::accumulate(inc.begin(), inc.end(), 0.0) / n;
  double lag1 = 0.0, var = 0.0;
  for (int i = 0; i + 1 < n; ++i)
    lag1 += (inc[i] - mean) * (inc[i + 1] - mean);
  for (double v : inc)
    var += (v - mean) * (v - mean);
  const double rho1 = lag1 / var;
  CHECK(std::abs(rho1) <= 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("fGn: self-similar terminal variance and lag autocovariance")
{
  const double H = 0.75;
  const double T = 1.0;
  const int n = 256;
  const int paths = 2000;
  std::vector<double> bT(paths);
  std::vector<std::vector<double>> lag_acc(6, std::vector<double>(paths, 0.0));
  for (int p = 0; p < paths; ++p) {
    RngStream rng(777, p);
    const std::vector<double> inc = simulate_fbm(H, n, T, rng);
    bT[p] = std::accumulate(inc.begin(), inc.end(), 0.0);
    for (int k = 0; k <= 5; ++k) {
      double acc = 0.0;
      for (int i = 0; i + k < n; ++i)
        acc += inc[i] * inc[i + k];
      lag_acc[k][p] = acc / (n - k);
    }
  }
  const MeanVar mv = mean_var(bT);
  // Var(B_T) = T^{2H}; sample variance of a Gaussian: se ~ sqrt(2/(n-1))
  const double target = std::pow(T, 2.0 * H);
  const double se_var = target * std::sqrt(2.0 / (paths - 1));
  CHECK(std::abs(mv.var - target) <= 3.0 * se_var);

  const double step_scale = std::pow(T / n, 2.0 * H);
  for (int k = 0; k <= 5; ++k) {
    const MeanVar lag = mean_var(lag_acc[k]);
    const double expect = step_scale * fgn_autocovariance(H, k);
    CHECK(std::abs(lag.mean - expect) <= 3.0 * lag.se_mean());
  }
}

TEST_CASE("fOU sample variance shrinks with the mean-reversion speed")
{
  const int n = 512;
  double prev = 1e300;
  for (double lambda : { 1.0, 5.0, 25.0 }) {
    std::vector<double> values;
    for (int p = 0; p < 60; ++p) {
      RngStream rng(31, p);
      const std::vector<double> y = simulate_fou(lambda, 0.3, 0.7, n, 1.0, rng);
      for (int i = 0; i <= n; i += 16)
        values.push_back(y[i]);
    }
    const MeanVar mv = mean_var(values);
    CHECK(mv.var < prev);
    prev = mv.var;
  }
}

TEST_CASE("fOU local increments scale like sigma^2 h^{2H}")
{
  const double H = 0.75, sigma = 0.4, lambda = 1.0;
  const int n = 1 << 12;
  const double T = 1.0;
  std::vector<double> ratios;
  for (int p = 0; p < 200; ++p) {
    RngStream rng(47, p);
    const std::vector<double> y = simulate_fou(lambda, sigma, H, n, T, rng);
    const double hstep = T / n;
    double acc = 0.0;
    int cnt = 0;
    for (int i = 0; i + 1 <= n; ++i) {
      const double d = y[i + 1] - y[i];
      acc += d * d;
      ++cnt;
    }
    ratios.push_back(acc / cnt / std::pow(hstep, 2.0 * H));
  }
  const MeanVar mv = mean_var(ratios);
  CHECK(std::abs(mv.mean - sigma * sigma) / (sigma * sigma) < 0.10);
}

TEST_CASE("fOU with sigma = 0 decays deterministically")
{
  RngStream rng(1);
  const std::vector<double> y = simulate_fou(2.0, 0.0, 0.75, 32, 1.0, rng, 1, 1.5);
  for (std::size_t i = 1; i < y.size(); ++i)
    CHECK(std::abs(y[i]) < std::abs(y[i - 1]) + 1e-15);
  CHECK(y.back() < 1e-3); // burn-in of 10/lambda plus decay over [0, T]
}

TEST_CASE("synthesize_price: constant variance gives the exact Gaussian law")
{
  const int n = 64, substeps = 4;
  const double T = 0.5, s2 = 0.09;
  const std::vector<double> var_fine(n * substeps + 1, s2);
  const int paths = 4000;
  std::vector<double> xT(paths);
  for (int p = 0; p < paths; ++p) {
    RngStream rng(2024, p);
    const SimulatedPath sim = synthesize_price(var_fine, { 0.0, 0.0 }, n, T, rng);
    xT[p] = sim.path.log_prices.back();
    CHECK(sim.true_iv == doctest::Approx(s2 * T).epsilon(1e-12));
  }
  const MeanVar mv = mean_var(xT);
  const double target = s2 * T;
  const double se_var = target * std::sqrt(2.0 / (paths - 1));
  CHECK(std::abs(mv.var - target) <= 3.0 * se_var);
  CHECK(std::abs(mv.mean) <= 3.0 * std::sqrt(target / paths));
}

TEST_CASE("synthesize_price with an fOU exp-driver: RV tracks true IV")
{
  const int n = 390, substeps = 5;
  const double T = 5.0 / 252.0;
  std::vector<double> diffs;
  for (int p = 0; p < 300; ++p) {
    RngStream rng(888, p);
    std::vector<double> y =
      simulate_fou(5.0, 0.5, 0.7, n * substeps, T, rng, 1, 0.0);
    for (double& v : y)
      v = 0.04 * std::exp(v); // variance driver
    const SimulatedPath sim = synthesize_price(y, { 0.05, -0.5 }, n, T, rng);
    diffs.push_back(realized_variance(sim.path) - sim.true_iv);
  }
  const MeanVar mv = mean_var(diffs);
  CHECK(std::abs(mv.mean) <= 3.0 * mv.se_mean());
}

TEST_CASE("config validation")
{
  HestonConfig bad;
  bad.n = 100;
  bad.horizon = 1.0;
  bad.xi = 1.0; // 2*5*0.04 = 0.4 < 1 violates Feller
  RngStream rng(1);
  CHECK_THROWS_AS(simulate_heston(bad, rng), std::invalid_argument);

  CHECK_THROWS_AS(simulate_fbm(1.2, 100, 1.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(simulate_fou(2.0, 0.3, 0.4, 32, 1.0, rng), std::invalid_argument);
}
