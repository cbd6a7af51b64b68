#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spotvol/bandwidth.hpp"
#include "spotvol/covariance.hpp"
#include "spotvol/errors.hpp"
#include "spotvol/kernels.hpp"
#include "spotvol/simulate.hpp"

#include <cmath>
#include <numeric>
#include <random>

using namespace spotvol;

TEST_CASE("approx_mse structure")
{
  const CovStructure bm = CovStructure::brownian_min();
  const Kernel k = Kernel::exponential();

  // pure variance term when l_scale = 0, strictly decreasing in h
  const VolModelMoments pure{ 2.0, 0.0 };
  double prev = 1e300;
  for (double h = 0.01; h < 1.0; h *= 1.5) {
    const double v = approx_mse(h, 1e-3, pure, k, bm);
    CHECK(v == doctest::Approx(2.0 * (1e-3 / h) * 2.0 * 0.25).epsilon(1e-14));
    CHECK(v < prev);
    prev = v;
  }

  // doubling Delta doubles the first term exactly
  const VolModelMoments m{ 1.3, 0.7 };
  const double h = 0.05;
  const double base = approx_mse(h, 1e-3, m, k, bm);
  const double doubled = approx_mse(h, 2e-3, m, k, bm);
  const double second_term = std::pow(h, 1.0) * 0.7 * 0.25;
  CHECK(doubled - second_term == doctest::Approx(2.0 * (base - second_term)).epsilon(1e-12));

  // derivative vanishes at the optimal bandwidth (finite differences)
  const int n = 2000;
  const double T = 1.0;
  const double hopt = optimal_bandwidth_local(n, T, m, k, bm);
  const double eps = 1e-6 * hopt;
  const double up = approx_mse(hopt + eps, T / n, m, k, bm);
  const double dn = approx_mse(hopt - eps, T / n, m, k, bm);
  const double deriv = (up - dn) / (2.0 * eps);
  CHECK(std::abs(deriv) * hopt < 1e-6 * approx_mse(hopt, T / n, m, k, bm));
}

TEST_CASE("optimal bandwidth closed forms")
{
  const CovStructure bm = CovStructure::brownian_min();
  const Kernel k = Kernel::exponential();

  // unit moments with the exponential kernel collapse to sqrt(2T/n)
  const VolModelMoments unit{ 1.0, 1.0 };
  for (int n : { 100, 1000, 4096 }) {
    const double T = 0.5;
    CHECK(optimal_bandwidth_local(n, T, unit, k, bm) ==
          doctest::Approx(std::sqrt(2.0 * T / n)).epsilon(1e-14));
  }

  // quadrupling n halves h when gamma = 1
  const VolModelMoments m{ 0.9, 2.1 };
  const double h1 = optimal_bandwidth_local(500, 1.0, m, k, bm);
  const double h4 = optimal_bandwidth_local(2000, 1.0, m, k, bm);
  CHECK(h4 == doctest::Approx(0.5 * h1).epsilon(1e-14));

  // argmin invariance under common scaling of the moments
  const VolModelMoments scaled{ 0.9 * 7.3, 2.1 * 7.3 };
  CHECK(optimal_bandwidth_local(500, 1.0, scaled, k, bm) ==
        doctest::Approx(h1).epsilon(1e-14));
}

TEST_CASE("optimal value identities and grid search")
{
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0.2, 5.0);
  const Kernel kernels[] = { Kernel::exponential(), Kernel::uniform(),
                             Kernel::triangular(), Kernel::epanechnikov() };
  const CovStructure covs[] = { CovStructure::brownian_min(),
                                CovStructure::fractional_bm(0.75) };
  for (int t = 0; t < 40; ++t) {
    const Kernel& k = kernels[t % 4];
    const CovStructure& cov = covs[t % 2];
    const VolModelMoments m{ u(gen), u(gen) };
    const int n = 256 << (t % 4);
    const double T = u(gen);
    const double hopt = optimal_bandwidth_local(n, T, m, k, cov);
    const double vopt = optimal_mse_value(n, T, m, k, cov);
    CHECK(vopt == doctest::Approx(approx_mse(hopt, T / n, m, k, cov)).epsilon(1e-12));

    // grid-search oracle: no grid point beats the closed form
    const auto grid = log_bandwidth_grid(hopt / 100.0, hopt * 100.0, 2001);
    double best = 1e300, best_h = 0.0;
    for (double h : grid) {
      const double v = approx_mse(h, T / n, m, k, cov);
      if (v < best) {
        best = v;
        best_h = h;
      }
    }
    CHECK(best >= vopt - 1e-12 * vopt);
    CHECK(std::abs(std::log(best_h / hopt)) <=
          std::log(grid[1] / grid[0]) + 1e-12);
  }
}

TEST_CASE("optimal_mse_value scales as n^{-1/2} for gamma = 1")
{
  const CovStructure bm = CovStructure::brownian_min();
  const Kernel k = Kernel::triangular();
  const VolModelMoments m{ 1.7, 0.4 };
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (int e = 10; e <= 16; ++e) {
    const int n = 1 << e;
    const double lx = std::log(static_cast<double>(n));
    const double ly = std::log(optimal_mse_value(n, 1.0, m, k, bm));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++cnt;
  }
  const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  CHECK(std::abs(slope + 0.5) < 1e-6);
}

TEST_CASE("optimal MSE ranking by kernel follows the BM objective")
{
  const CovStructure bm = CovStructure::brownian_min();
  const VolModelMoments m{ 1.0, 1.0 };
  const double v_exp = optimal_mse_value(1000, 1.0, m, Kernel::exponential(), bm);
  const double v_tri = optimal_mse_value(1000, 1.0, m, Kernel::triangular(), bm);
  const double v_epa = optimal_mse_value(1000, 1.0, m, Kernel::epanechnikov(), bm);
  const double v_uni = optimal_mse_value(1000, 1.0, m, Kernel::uniform(), bm);
  CHECK(v_exp < v_tri);
  CHECK(v_tri < v_epa);
  CHECK(v_epa < v_uni);
  // MSE^opt proportional to sqrt(I(K)) at gamma = 1
  CHECK(v_tri / v_exp ==
        doctest::Approx(std::sqrt(bm_objective_I(Kernel::triangular()) /
                                  bm_objective_I(Kernel::exponential())))
          .epsilon(1e-12));
}

TEST_CASE("global equals local under constant moments")
{
  const CovStructure bm = CovStructure::brownian_min();
  const Kernel k = Kernel::epanechnikov();
  const VolModelMoments m{ 1.1, 0.8 };
  CHECK(optimal_bandwidth_global(700, 2.0, m, k, bm) ==
        optimal_bandwidth_local(700, 2.0, m, k, bm));
}

TEST_CASE("initial bandwidth closed forms")
{
  const CovStructure bm = CovStructure::brownian_min();
  for (int n : { 100, 1639 }) {
    const double T = 21.0 / 252.0;
    CHECK(initial_bandwidth(n, T, Kernel::exponential(), bm) ==
          doctest::Approx(std::sqrt(2.0 * T / n)).epsilon(1e-14));
    CHECK(initial_bandwidth(n, T, Kernel::uniform(), bm) ==
          doctest::Approx(std::sqrt(6.0 * T / n)).epsilon(1e-14));
  }
}

TEST_CASE("errors")
{
  const CovStructure det = CovStructure::deterministic_smooth(1);
  const VolModelMoments m{ 1.0, 1.0 };
  // symmetric kernel: quadratic form vanishes -> denominator not positive
  CHECK_THROWS_AS(
    optimal_bandwidth_local(100, 1.0, m, Kernel::epanechnikov(), det),
    NonpositiveDenominator);
  const CovStructure bm = CovStructure::brownian_min();
  CHECK_THROWS_AS(
    optimal_bandwidth_local(100, 1.0, { 1.0, 0.0 }, Kernel::exponential(), bm),
    NonpositiveDenominator);
}

TEST_CASE("plugin_select on simulated data")
{
  const CovStructure bm = CovStructure::brownian_min();
  const Kernel k = Kernel::exponential();
  HestonConfig cfg;
  cfg.n = 1638;
  cfg.horizon = 21.0 / 252.0;
  cfg.substeps = 5;

  SUBCASE("max_iter = 0 returns the initial plan")
  {
    RngStream rng(4, 0);
    const SimulatedPath sim = simulate_heston(cfg, rng);
    PluginOptions opt;
    opt.max_iter = 0;
    const auto [plan, series] = plugin_select(sim.path, k, bm, opt);
    CHECK(plan.h == doctest::Approx(initial_bandwidth(cfg.n, cfg.horizon, k, bm)));
    CHECK(plan.iterations == 0);
    CHECK(series.estimates.size() == static_cast<std::size_t>(cfg.n + 1));
    CHECK(series.boundary_corrected);
  }

  SUBCASE("fixed point lands near the oracle bandwidth")
  {
    // oracle uses the true integrated moments from the simulator
    int hits = 0;
    const int paths = 24;
    for (int p = 0; p < paths; ++p) {
      RngStream rng(4, 100 + p);
      const SimulatedPath sim = simulate_heston(cfg, rng);
      PluginOptions opt;
      opt.max_iter = 4;
      const auto [plan, series] = plugin_select(sim.path, k, bm, opt);
      const double g2 = cfg.xi * cfg.xi * sim.true_iv;
      const double h_oracle = optimal_bandwidth_global(
        cfg.n, cfg.horizon, { sim.true_iq, g2 }, k, bm);
      if (std::abs(plan.h - h_oracle) <= 0.5 * h_oracle)
        ++hits;
    }
    CHECK(hits >= paths * 3 / 4); // plug-in tracks the oracle scale
  }

  SUBCASE("history steps contract after the first iteration")
  {
    int ok = 0, total = 0;
    for (int p = 0; p < 40; ++p) {
      RngStream rng(9, p);
      const SimulatedPath sim = simulate_heston(cfg, rng);
      PluginOptions opt;
      opt.max_iter = 3;
      opt.rel_tol = 0.0; // force all iterations
      const auto [plan, series] = plugin_select(sim.path, k, bm, opt);
      if (plan.history.size() >= 4) {
        const double d1 = std::abs(plan.history[2].h - plan.history[1].h);
        const double d2 = std::abs(plan.history[3].h - plan.history[2].h);
        ok += d2 <= d1 + 1e-12 ? 1 : 0;
        ++total;
      }
    }
    REQUIRE(total > 0);
    CHECK(ok >= total * 9 / 10);
  }
}

TEST_CASE("cross validation")
{
  const CovStructure bm = CovStructure::brownian_min();
  const Kernel k = Kernel::exponential();

  SUBCASE("single-element grid returns that element")
  {
    HestonConfig cfg;
    cfg.n = 390;
    cfg.horizon = 5.0 / 252.0;
    RngStream rng(12, 0);
    const SimulatedPath sim = simulate_heston(cfg, rng);
    const BandwidthPlan plan = cross_validate(sim.path, k, { 0.003 });
    CHECK(plan.h == 0.003);
    CHECK(plan.provenance == BandwidthMethod::cross_validation);
  }

  SUBCASE("tiny bandwidths lose to moderate ones and the argmin is sane")
  {
    HestonConfig cfg;
    cfg.n = 1638;
    cfg.horizon = 21.0 / 252.0;
    cfg.substeps = 5;
    int moderate_wins = 0;
    for (int p = 0; p < 10; ++p) {
      RngStream rng(13, p);
      const SimulatedPath sim = simulate_heston(cfg, rng);
      const double h0 = initial_bandwidth(cfg.n, cfg.horizon, k, bm);
      const BandwidthPlan plan =
        cross_validate(sim.path, k, log_bandwidth_grid(h0 / 20, h0 * 20, 21));
      if (plan.h > h0 / 20 * 1.5)
        ++moderate_wins; // the smallest grid point should not win
    }
    CHECK(moderate_wins >= 9);
  }

  SUBCASE("exponential CV fast path equals the generic objective route")
  {
    // same argmin from the O(n) route and a brute-force leave-one-out scan
    HestonConfig cfg;
    cfg.n = 300;
    cfg.horizon = 5.0 / 252.0;
    RngStream rng(14, 0);
    const SimulatedPath sim = simulate_heston(cfg, rng);
    const int l = static_cast<int>(0.1 * cfg.n);
    const auto grid = log_bandwidth_grid(0.001, 0.05, 9);

    double best_obj = 1e300, best_h = 0.0;
    for (double h : grid) {
      double obj = 0.0;
      for (int i = l + 1; i <= cfg.n - l; ++i) {
        const double tau = sim.path.time(i - 1);
        double num = 0.0, wsum = 0.0;
        for (int j = 1; j <= cfg.n; ++j) {
          if (j == i)
            continue;
          const double w = Kernel::exponential()((sim.path.time(j - 1) - tau) / h) / h;
          const double d = sim.path.increment(j);
          num += w * d * d;
          wsum += w;
        }
        const double d = sim.path.increment(i);
        const double resid =
          d * d / sim.path.delta() - num / (sim.path.delta() * wsum);
        obj += resid * resid;
      }
      if (obj < best_obj) {
        best_obj = obj;
        best_h = h;
      }
    }
    const BandwidthPlan plan = cross_validate(sim.path, k, grid);
    CHECK(plan.h == doctest::Approx(best_h));
    CHECK(plan.cv_objective == doctest::Approx(best_obj).epsilon(1e-9));
  }
}
