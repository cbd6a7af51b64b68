#include "spotvol/asymptotics.hpp"

#include "spotvol/covariance.hpp"
#include "spotvol/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace spotvol {

double CltConstants::total_se() const
{
  return std::sqrt(delta1_sq * rate_discr * rate_discr +
                   delta2_sq * rate_smooth * rate_smooth);
}

CltConstants clt_constants(double sigma2_tau, double g_tau_sq,
                           const Kernel& kernel, const CovStructure& cov,
                           double h, double delta)
{
  if (!(h > 0.0) || !(delta > 0.0))
    throw std::invalid_argument("clt_constants: h and delta must be positive");
  if (sigma2_tau < 0.0 || g_tau_sq < 0.0)
    throw std::invalid_argument("clt_constants: variance inputs must be >= 0");
  CltConstants c;
  c.delta1_sq = 2.0 * sigma2_tau * sigma2_tau * l2_norm(kernel);
  c.delta2_sq = g_tau_sq * quadratic_form(cov, kernel);
  c.rate_discr = std::sqrt(delta / h);
  c.rate_smooth = std::pow(h, cov.gamma() / 2.0);
  return c;
}

double normal_quantile(double p)
{
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("normal_quantile: p must lie in (0, 1)");
  auto cdf = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
  double lo = -40.0, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

ConfidenceBands confidence_bands(const SpotVolSeries& series, double level,
                                 double g_sq, const Kernel& kernel,
                                 const CovStructure& cov, bool g_sq_is_proxy)
{
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("confidence_bands: level must lie in (0, 1)");
  const int n = static_cast<int>(series.estimates.size()) - 1;
  const double delta = series.horizon / n;
  const double z = normal_quantile(0.5 * (1.0 + level));
  const double l2 = l2_norm(kernel);
  const double qf = quadratic_form(cov, kernel);
  const double g = cov.gamma();
  const double discr = delta / series.bandwidth;
  const double smooth = std::pow(series.bandwidth, g);

  ConfidenceBands bands;
  bands.level = level;
  bands.g_sq_is_proxy = g_sq_is_proxy;
  bands.lo.resize(n + 1);
  bands.hi.resize(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double s2 = series.estimates[i];
    const double var = 2.0 * s2 * s2 * l2 * discr + g_sq * qf * smooth;
    const double half = z * std::sqrt(std::max(var, 0.0));
    bands.lo[i] = s2 - half;
    bands.hi[i] = s2 + half;
  }
  return bands;
}

} // namespace spotvol
