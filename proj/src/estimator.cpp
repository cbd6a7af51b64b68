#include "spotvol/estimator.hpp"

#include "spotvol/errors.hpp"
#include "spotvol/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace spotvol {

namespace {

constexpr double kNormalizerFloor = 1e-300;

std::vector<double> squared_increments(const PricePath& path)
{
  std::vector<double> w(path.n());
  for (int i = 1; i <= path.n(); ++i) {
    const double d = path.increment(i);
    w[i - 1] = d * d; // weight location t_{i-1}
  }
  return w;
}

} // namespace

PricePath::PricePath(double T, std::vector<double> x)
  : horizon(T), log_prices(std::move(x))
{
  if (!(T > 0.0))
    throw std::invalid_argument("PricePath: horizon must be positive");
  if (log_prices.size() < 3)
    throw std::invalid_argument("PricePath: need at least 2 increments");
  for (double v : log_prices)
    if (!std::isfinite(v))
      throw std::invalid_argument("PricePath: non-finite log price");
}

double realized_variance(const PricePath& path)
{
  long double s = 0.0L;
  for (int i = 1; i <= path.n(); ++i) {
    const long double d = path.increment(i);
    s += d * d;
  }
  return static_cast<double>(s);
}

double realized_quarticity(const PricePath& path)
{
  long double s = 0.0L;
  for (int i = 1; i <= path.n(); ++i) {
    const long double d = path.increment(i);
    s += d * d * d * d;
  }
  return static_cast<double>(s / (3.0L * path.delta()));
}

namespace {

// Direct evaluation of numerator and weight sum at tau; restricts the loop to
// the kernel window for bounded supports.
void direct_sums(const PricePath& path, const Kernel& kernel, double h,
                 double tau, long double& num, long double& wsum,
                 std::uint64_t* evals)
{
  const int n = path.n();
  const double delta = path.delta();
  int lo = 0, hi = n - 1;
  if (kernel.bounded_support()) {
    const double left = tau + h * kernel.support_left();
    const double right = tau + h * kernel.support_right();
    lo = std::max(0, static_cast<int>(std::floor(left / delta)) - 1);
    hi = std::min(n - 1, static_cast<int>(std::ceil(right / delta)) + 1);
  }
  num = 0.0L;
  wsum = 0.0L;
  for (int p = lo; p <= hi; ++p) {
    const double x = (path.time(p) - tau) / h;
    const double k = kernel(x);
    if (evals)
      ++*evals;
    if (k == 0.0)
      continue;
    const double d = path.increment(p + 1);
    num += static_cast<long double>(k) * d * d;
    wsum += k;
  }
  num /= h;
  wsum /= h;
}

} // namespace

double spot_vol_at(const PricePath& path, const Kernel& kernel, double h,
                   double tau, bool boundary_corrected)
{
  if (!(h > 0.0))
    throw std::invalid_argument("spot_vol_at: bandwidth must be positive");
  long double num = 0.0L, wsum = 0.0L;
  direct_sums(path, kernel, h, tau, num, wsum, nullptr);
  if (!boundary_corrected)
    return static_cast<double>(num);
  const long double den = static_cast<long double>(path.delta()) * wsum;
  if (!(den > kNormalizerFloor))
    throw DegenerateWeights("spot_vol_at: boundary normalizer underflow");
  return static_cast<double>(num / den);
}

namespace {

SpotVolSeries make_series(const PricePath& path, const Kernel& kernel, double h,
                          bool corrected)
{
  SpotVolSeries s;
  s.estimates.resize(path.n() + 1);
  s.bandwidth = h;
  s.kernel_id = kernel.id();
  s.boundary_corrected = corrected;
  s.horizon = path.horizon;
  return s;
}

// Exponential kernel: forward/backward geometric recursions, O(n) total.
// F[j] = sum_{p<=j} rho^{j-p} w_p, B[j] = sum_{p>j} rho^{p-j} w_p, with the
// index p capped at n-1 (weights sit at left endpoints t_0..t_{n-1}).
SpotVolSeries exp_grid(const PricePath& path, double h, bool corrected,
                       GridEvalStats* stats)
{
  const int n = path.n();
  const double delta = path.delta();
  const double rho = std::exp(-delta / h);
  const std::vector<double> w = squared_increments(path);

  std::vector<long double> fw(n + 1), bw(n + 1), fd(n + 1), bd(n + 1);
  fw[0] = w[0];
  fd[0] = 1.0L;
  for (int j = 1; j <= n; ++j) {
    const long double add_w = j <= n - 1 ? w[j] : 0.0L;
    const long double add_d = j <= n - 1 ? 1.0L : 0.0L;
    fw[j] = rho * fw[j - 1] + add_w;
    fd[j] = rho * fd[j - 1] + add_d;
    if (stats)
      stats->state_updates += 2;
  }
  bw[n] = bd[n] = 0.0L;
  if (n >= 1) {
    bw[n - 1] = bd[n - 1] = 0.0L;
    for (int j = n - 2; j >= 0; --j) {
      bw[j] = rho * (bw[j + 1] + w[j + 1]);
      bd[j] = rho * (bd[j + 1] + 1.0L);
      if (stats)
        stats->state_updates += 2;
    }
  }

  SpotVolSeries s = make_series(path, Kernel::exponential(), h, corrected);
  const long double inv2h = 0.5L / h;
  for (int j = 0; j <= n; ++j) {
    const long double num = (fw[j] + bw[j]) * inv2h;
    if (!corrected) {
      s.estimates[j] = static_cast<double>(num);
      continue;
    }
    const long double den = (fd[j] + bd[j]) * inv2h * delta;
    if (!(den > kNormalizerFloor))
      throw DegenerateWeights("spot_vol_grid: boundary normalizer underflow");
    s.estimates[j] = static_cast<double>(num / den);
  }
  if (stats)
    stats->fast_path = true;
  return s;
}

// Uniform kernel: moving window via prefix sums. The window at t_j holds the
// weight positions p with |t_p - t_j| < h. Positions within `core` steps are
// certainly inside; the few lattice-edge cells are decided with the same
// floating-point expression direct evaluation uses, so the fast path agrees
// with the naive double loop even when h sits exactly on the step lattice.
SpotVolSeries uniform_grid(const PricePath& path, double h, bool corrected,
                           GridEvalStats* stats)
{
  const int n = path.n();
  const double delta = path.delta();
  const int c = static_cast<int>(std::floor(h / delta)) + 2;
  const int core = std::max(-1, c - 6); // core * delta <= h - 4 delta < h
  const std::vector<double> w = squared_increments(path);
  std::vector<long double> prefix(n + 1, 0.0L);
  for (int p = 0; p < n; ++p)
    prefix[p + 1] = prefix[p] + w[p];
  if (stats)
    stats->state_updates += static_cast<std::uint64_t>(n);

  SpotVolSeries s = make_series(path, Kernel::uniform(), h, corrected);
  const double inv2h = 0.5 / h;
  for (int j = 0; j <= n; ++j) {
    long double num = 0.0L;
    int count = 0;
    const int lo_core = std::max(0, j - core);
    const int hi_core = std::min(n - 1, j + core);
    if (core >= 0 && lo_core <= hi_core) {
      num = prefix[hi_core + 1] - prefix[lo_core];
      count = hi_core - lo_core + 1;
    }
    auto edge = [&](int p_lo, int p_hi) {
      for (int p = std::max(0, p_lo); p <= std::min(n - 1, p_hi); ++p) {
        const double x = (path.time(p) - path.time(j)) / h;
        if (stats)
          ++stats->kernel_evals;
        if (std::abs(x) < 1.0) {
          num += w[p];
          ++count;
        }
      }
    };
    if (core < 0) {
      edge(j - c, j + c);
    } else {
      edge(j - c, j - core - 1);
      edge(j + core + 1, j + c);
    }

    if (count == 0) {
      if (corrected)
        throw DegenerateWeights("spot_vol_grid: empty uniform window");
      s.estimates[j] = 0.0;
      continue;
    }
    if (!corrected) {
      s.estimates[j] = static_cast<double>(num * inv2h);
      continue;
    }
    const long double den = static_cast<long double>(count) * inv2h * delta;
    if (!(den > kNormalizerFloor))
      throw DegenerateWeights("spot_vol_grid: boundary normalizer underflow");
    s.estimates[j] = static_cast<double>(num * inv2h / den);
  }
  if (stats)
    stats->fast_path = true;
  return s;
}

} // namespace

SpotVolSeries spot_vol_grid(const PricePath& path, const Kernel& kernel,
                            double h, bool boundary_corrected,
                            GridEvalStats* stats)
{
  if (!(h > 0.0))
    throw std::invalid_argument("spot_vol_grid: bandwidth must be positive");
  if (kernel.kind() == KernelKind::exponential)
    return exp_grid(path, h, boundary_corrected, stats);
  if (kernel.kind() == KernelKind::uniform)
    return uniform_grid(path, h, boundary_corrected, stats);

  SpotVolSeries s = make_series(path, kernel, h, boundary_corrected);
  for (int j = 0; j <= path.n(); ++j) {
    long double num = 0.0L, wsum = 0.0L;
    direct_sums(path, kernel, h, path.time(j), num, wsum,
                stats ? &stats->kernel_evals : nullptr);
    if (!boundary_corrected) {
      s.estimates[j] = static_cast<double>(num);
      continue;
    }
    const long double den = static_cast<long double>(path.delta()) * wsum;
    if (!(den > kNormalizerFloor))
      throw DegenerateWeights("spot_vol_grid: boundary normalizer underflow");
    s.estimates[j] = static_cast<double>(num / den);
  }
  return s;
}

ExpState exp_recurrence_step(const ExpState& state, double next_increment_sq,
                             double delta_over_h)
{
  const double down = std::exp(-delta_over_h);
  const double up = std::exp(delta_over_h);
  ExpState next;
  next.sum_minus = down * (state.sum_minus + state.sum_star);
  next.sum_star = next_increment_sq;
  next.sum_plus = up * state.sum_plus - next_increment_sq;
  return next;
}

double online_update(double prev_estimate, double new_increment_sq, double h,
                     double delta)
{
  if (!(h > 0.0) || !(delta > 0.0))
    throw std::invalid_argument("online_update: h and delta must be positive");
  return std::exp(-delta / h) *
         (prev_estimate + new_increment_sq / (2.0 * h));
}

namespace {

int grid_index(const PricePath& path, double tau)
{
  const double delta = path.delta();
  const double pos = tau / delta;
  const int i = static_cast<int>(std::lround(pos));
  if (i < 0 || i > path.n() ||
      std::abs(tau - path.time(i)) > 1e-9 * std::max(delta, std::abs(tau)))
    throw std::invalid_argument("one_sided: tau must lie on the grid");
  return i;
}

} // namespace

double one_sided(const PricePath& path, const Kernel& kernel, double h,
                 double tau, Side side)
{
  if (!(h > 0.0))
    throw std::invalid_argument("one_sided: bandwidth must be positive");
  const int n = path.n();
  const int i = grid_index(path, tau);
  int j_lo = side == Side::left ? i + 1 : 1;
  int j_hi = side == Side::left ? n : i;
  if (j_lo > j_hi)
    throw EmptySide("one_sided: no increments on the requested side");
  if (kernel.bounded_support()) {
    // restrict to the kernel window; weights sit at t_{j-1}
    const double lo_t = tau + h * kernel.support_left();
    const double hi_t = tau + h * kernel.support_right();
    const double delta = path.delta();
    j_lo = std::max(j_lo, static_cast<int>(std::floor(lo_t / delta)));
    j_hi = std::min(j_hi, static_cast<int>(std::ceil(hi_t / delta)) + 2);
  }
  long double num = 0.0L, wsum = 0.0L;
  for (int j = j_lo; j <= j_hi; ++j) {
    const double k = kernel((path.time(j - 1) - tau) / h);
    if (k == 0.0)
      continue;
    const double d = path.increment(j);
    num += static_cast<long double>(k) * d * d;
    wsum += k;
  }
  const long double den = wsum * static_cast<long double>(path.delta());
  if (!(den > kNormalizerFloor))
    throw DegenerateWeights("one_sided: weight sum underflow");
  return static_cast<double>(num / den);
}

std::vector<double> one_sided_grid(const PricePath& path, const Kernel& kernel,
                                   double h, Side side)
{
  if (!(h > 0.0))
    throw std::invalid_argument("one_sided_grid: bandwidth must be positive");
  const int n = path.n();
  std::vector<double> out(n + 1,
                          std::numeric_limits<double>::quiet_NaN());

  if (kernel.kind() == KernelKind::exponential) {
    const double delta = path.delta();
    const double rho = std::exp(-delta / h);
    const std::vector<double> w = squared_increments(path);
    if (side == Side::left) {
      // G[i] = sum_{p >= i} rho^{p-i} w_p; estimate_i = G[i] / (Delta Gd[i])
      long double g = 0.0L, gd = 0.0L;
      for (int i = n - 1; i >= 0; --i) {
        g = w[i] + rho * g;
        gd = 1.0L + rho * gd;
        out[i] = static_cast<double>(g / (gd * delta));
      }
    } else {
      long double g = 0.0L, gd = 0.0L;
      for (int i = 1; i <= n; ++i) {
        g = rho * (g + w[i - 1]);
        gd = rho * (gd + 1.0L);
        out[i] = static_cast<double>(g / (gd * delta));
      }
    }
    return out;
  }

  const int lo = side == Side::left ? 0 : 1;
  const int hi = side == Side::left ? n - 1 : n;
  for (int i = lo; i <= hi; ++i)
    out[i] = one_sided(path, kernel, h, path.time(i), side);
  return out;
}

} // namespace spotvol
