#include "spotvol/bandwidth.hpp"

#include "spotvol/covariance.hpp"
#include "spotvol/errors.hpp"
#include "spotvol/kernels.hpp"
#include "spotvol/parallel.hpp"
#include "spotvol/volvol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace spotvol {

double approx_mse(double h, double delta, const VolModelMoments& moments,
                  const Kernel& kernel, const CovStructure& cov)
{
  if (!(h > 0.0) || !(delta > 0.0))
    throw std::invalid_argument("approx_mse: h and delta must be positive");
  return 2.0 * (delta / h) * moments.e_sigma4 * l2_norm(kernel) +
         std::pow(h, cov.gamma()) * moments.l_scale * quadratic_form(cov, kernel);
}

namespace {

struct BandwidthTerms {
  double num; // 2 T E[sigma^4] int K^2
  double den; // gamma L iint K K C
  double gamma;
};

BandwidthTerms bandwidth_terms(int n, double T, const VolModelMoments& m,
                               const Kernel& kernel, const CovStructure& cov)
{
  if (n < 2 || !(T > 0.0))
    throw std::invalid_argument("bandwidth: need n >= 2 and T > 0");
  const double g = cov.gamma();
  const double qf = quadratic_form(cov, kernel);
  const double den = g * m.l_scale * qf;
  if (!(den > 0.0))
    throw NonpositiveDenominator(
      "optimal bandwidth: gamma * L * iint K K C_gamma must be positive");
  return { 2.0 * T * m.e_sigma4 * l2_norm(kernel), den, g };
}

} // namespace

double optimal_bandwidth_local(int n, double T, const VolModelMoments& moments,
                               const Kernel& kernel, const CovStructure& cov)
{
  const BandwidthTerms t = bandwidth_terms(n, T, moments, kernel, cov);
  return std::pow(static_cast<double>(n), -1.0 / (t.gamma + 1.0)) *
         std::pow(t.num / t.den, 1.0 / (t.gamma + 1.0));
}

double optimal_mse_value(int n, double T, const VolModelMoments& moments,
                         const Kernel& kernel, const CovStructure& cov)
{
  const BandwidthTerms t = bandwidth_terms(n, T, moments, kernel, cov);
  const double g = t.gamma;
  return std::pow(static_cast<double>(n), -g / (1.0 + g)) * (1.0 + 1.0 / g) *
         std::pow(t.num, g / (1.0 + g)) * std::pow(t.den, 1.0 / (1.0 + g));
}

double optimal_bandwidth_global(int n, double T,
                                const VolModelMoments& integrated_moments,
                                const Kernel& kernel, const CovStructure& cov)
{
  return optimal_bandwidth_local(n, T, integrated_moments, kernel, cov);
}

double initial_bandwidth(int n, double T, const Kernel& kernel,
                         const CovStructure& cov)
{
  if (cov.gamma() != 1.0)
    throw std::invalid_argument("initial_bandwidth is defined for gamma = 1");
  return std::sqrt(2.0 * T * l2_norm(kernel) /
                   (n * quadratic_form(cov, kernel)));
}

std::pair<BandwidthPlan, SpotVolSeries> plugin_select(const PricePath& path,
                                                      const Kernel& kernel,
                                                      const CovStructure& cov,
                                                      const PluginOptions& opt)
{
  if (cov.gamma() != 1.0)
    throw std::invalid_argument("plugin_select requires a gamma = 1 structure");
  const int n = path.n();
  const double T = path.horizon;
  const double l2 = l2_norm(kernel);
  const double qf = quadratic_form(cov, kernel);
  const double iq = realized_quarticity(path);
  const int k = opt.k > 0 ? opt.k : default_k(n);
  const int b = opt.b > 0 ? opt.b : default_b(n);

  BandwidthPlan plan;
  plan.provenance = BandwidthMethod::plugin;
  plan.h = std::sqrt(2.0 * T * l2 / (n * qf));
  plan.history.push_back({ plan.h, iq, 0.0 });

  for (int it = 0; it < opt.max_iter; ++it) {
    const VolVolEstimate vv = tsrvv(path, kernel, plan.h, k, b);
    if (!(vv.ivv > 0.0))
      throw VolVolDegenerate(
        "plugin_select: TSRVV is zero after fallback; keep the initial bandwidth");
    const double h_new = std::sqrt(2.0 * T * iq * l2 / (n * vv.ivv * qf));
    plan.history.push_back({ h_new, iq, vv.ivv });
    const double step = std::abs(h_new - plan.h);
    plan.h = h_new;
    plan.iterations = it + 1;
    if (step <= opt.rel_tol * plan.h)
      break;
  }
  SpotVolSeries series = spot_vol_grid(path, kernel, plan.h, true);
  return { std::move(plan), std::move(series) };
}

namespace {

// CV objective at one bandwidth. For the exponential kernel the full-grid
// numerator/denominator sums come from the O(n) fast path; excluding
// increment i only removes its own K_h(0) term at tau = t_{i-1}.
double cv_objective(const PricePath& path, const Kernel& kernel, double h,
                    int l)
{
  const int n = path.n();
  const double delta = path.delta();
  long double obj = 0.0L;

  if (kernel.kind() == KernelKind::exponential) {
    const double k0 = 0.5 / h; // K_h(0)
    SpotVolSeries num = spot_vol_grid(path, kernel, h, false);
    // Weight sums: same recursion applied to a unit path of increments.
    std::vector<double> unit(n + 1);
    for (int i = 0; i <= n; ++i)
      unit[i] = static_cast<double>(i) * std::sqrt(delta);
    SpotVolSeries den = spot_vol_grid(PricePath(path.horizon, unit), kernel, h,
                                      false);
    for (int i = l + 1; i <= n - l; ++i) {
      const double d = path.increment(i);
      const double num_i = num.estimates[i - 1] - k0 * d * d;
      const double den_i = (den.estimates[i - 1] / delta - k0) * delta;
      if (!(den_i > 1e-300))
        return std::numeric_limits<double>::infinity();
      const double resid = d * d / delta - num_i / den_i;
      obj += static_cast<long double>(resid) * resid;
    }
    return static_cast<double>(obj);
  }

  for (int i = l + 1; i <= n - l; ++i) {
    const double tau = path.time(i - 1);
    long double num = 0.0L, wsum = 0.0L;
    const int lo = kernel.bounded_support()
                     ? std::max(0, static_cast<int>(std::floor(
                                     (tau + h * kernel.support_left()) / delta)) - 1)
                     : 0;
    const int hi = kernel.bounded_support()
                     ? std::min(n - 1, static_cast<int>(std::ceil(
                                         (tau + h * kernel.support_right()) / delta)) + 1)
                     : n - 1;
    for (int p = lo; p <= hi; ++p) {
      if (p == i - 1)
        continue; // leave increment i out
      const double kv = kernel((path.time(p) - tau) / h);
      if (kv == 0.0)
        continue;
      const double d = path.increment(p + 1);
      num += static_cast<long double>(kv) * d * d;
      wsum += kv;
    }
    const long double den = wsum * static_cast<long double>(delta);
    if (!(den > 1e-300))
      return std::numeric_limits<double>::infinity();
    const double d = path.increment(i);
    const double resid = d * d / delta - static_cast<double>(num / den);
    obj += static_cast<long double>(resid) * resid;
  }
  return static_cast<double>(obj);
}

} // namespace

BandwidthPlan cross_validate(const PricePath& path, const Kernel& kernel,
                             const std::vector<double>& h_grid, double trim)
{
  if (h_grid.empty())
    throw std::invalid_argument("cross_validate: empty bandwidth grid");
  if (!(trim >= 0.0 && trim < 0.5))
    throw std::invalid_argument("cross_validate: trim must lie in [0, 0.5)");
  for (double h : h_grid)
    if (!(h > 0.0))
      throw std::invalid_argument("cross_validate: bandwidths must be positive");
  const int l = static_cast<int>(std::floor(trim * path.n()));

  // grid points are independent; evaluate concurrently, select in fixed order
  std::vector<double> objectives(h_grid.size());
  parallel_units(static_cast<int>(h_grid.size()), 0, [&](int i) {
    objectives[i] = cv_objective(path, kernel, h_grid[i], l);
  });

  BandwidthPlan plan;
  plan.provenance = BandwidthMethod::cross_validation;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < h_grid.size(); ++i) {
    if (objectives[i] < best) {
      best = objectives[i];
      plan.h = h_grid[i];
    }
  }
  plan.cv_objective = best;
  return plan;
}

std::vector<double> log_bandwidth_grid(double lo, double hi, int count)
{
  if (!(lo > 0.0) || !(hi > lo) || count < 1)
    throw std::invalid_argument("log_bandwidth_grid: need 0 < lo < hi, count >= 1");
  std::vector<double> g(count);
  if (count == 1) {
    g[0] = lo;
    return g;
  }
  const double step = std::log(hi / lo) / (count - 1);
  for (int i = 0; i < count; ++i)
    g[i] = lo * std::exp(step * i);
  return g;
}

} // namespace spotvol
