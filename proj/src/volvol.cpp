#include "spotvol/volvol.hpp"

#include "spotvol/errors.hpp"
#include "spotvol/kernels.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace spotvol {

VolVolEstimate tsrvv(const PricePath& path, const Kernel& kernel, double h,
                     int k, int b, TsrvvMode mode)
{
  const int n = path.n();
  if (k < 2 || b < 1 || 2 * b + k >= n)
    throw InvalidScales("tsrvv: need k >= 2, b >= 1 and 2b + k < n");
  if (!(h > 0.0))
    throw std::invalid_argument("tsrvv: bandwidth must be positive");

  // The differences pair a backward-looking estimate at the early time with a
  // forward-looking estimate at the late time, so both windows face away from
  // the gap. The h-induced smoothing offset is then common to the coarse and
  // fine scales and cancels in the bias correction, which is what makes the
  // two-scale construction work at finite n.
  const std::vector<double> fwd = one_sided_grid(path, kernel, h, Side::left);
  const std::vector<double> bwd = one_sided_grid(path, kernel, h, Side::right);

  long double coarse = 0.0L;
  for (int i = b; i <= n - k - b; ++i) {
    const long double d = static_cast<long double>(fwd[i + k]) - bwd[i];
    coarse += d * d;
  }
  long double fine = 0.0L;
  for (int i = b + k - 1; i <= n - k - b; ++i) {
    const long double d = static_cast<long double>(fwd[i + 1]) - bwd[i];
    fine += d * d;
  }

  VolVolEstimate out;
  out.k = k;
  out.b = b;
  const long double first = coarse / k;
  const long double correction =
    mode == TsrvvMode::standard
      ? static_cast<long double>(n - k + 1) / (static_cast<long double>(n) * k) * fine
      : fine / k;
  const long double corrected = first - correction;
  if (corrected > 0.0L) {
    out.ivv = static_cast<double>(corrected);
  } else {
    out.ivv = static_cast<double>(first);
    out.used_fallback = true;
  }
  return out;
}

int default_k(int n, KScaleMode mode, double c)
{
  if (n < 8)
    throw std::invalid_argument("default_k: need n >= 8");
  if (!(c > 0.0))
    throw std::invalid_argument("default_k: c must be positive");
  const double expo = mode == KScaleMode::simple ? 2.0 / 3.0 : 0.75;
  const double v = c * std::pow(static_cast<double>(n), expo);
  return std::max(2, static_cast<int>(std::lround(v)));
}

int default_b(int n)
{
  return std::max(1, static_cast<int>(std::lround(0.05 * n)));
}

double heston_xi(double ivv, double iv_hat)
{
  if (ivv < 0.0)
    throw std::invalid_argument("heston_xi: ivv must be >= 0");
  if (ivv == 0.0)
    return 0.0;
  if (!(iv_hat > 0.0))
    throw std::invalid_argument("heston_xi: iv_hat must be positive");
  return std::sqrt(ivv / iv_hat);
}

} // namespace spotvol
