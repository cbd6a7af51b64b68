#include "spotvol/kernel_optimizer.hpp"

#include "spotvol/errors.hpp"
#include "spotvol/simulate.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace spotvol {

namespace {

std::vector<double> build_a_matrix(double gamma, int m)
{
  std::vector<double> A(static_cast<std::size_t>(m) * m);
  for (int i = 0; i < m; ++i) {
    const double xi = (i + 0.5) / m;
    for (int j = 0; j <= i; ++j) {
      const double xj = (j + 0.5) / m;
      const double v = std::pow(xi, gamma) + std::pow(xj, gamma) -
                       0.5 * std::pow(xi + xj, gamma) -
                       0.5 * std::pow(std::abs(xi - xj), gamma);
      A[static_cast<std::size_t>(i) * m + j] = v;
      A[static_cast<std::size_t>(j) * m + i] = v;
    }
  }
  return A;
}

struct ObjectiveParts {
  double s1;            // sum a_i
  double s2;            // sum a_i^2
  double q;             // a' A a
  std::vector<double> aa; // A a
};

ObjectiveParts parts(const std::vector<double>& a, const std::vector<double>& A,
                     int m)
{
  ObjectiveParts p;
  p.s1 = 0.0;
  p.s2 = 0.0;
  p.aa.assign(m, 0.0);
  for (int i = 0; i < m; ++i) {
    p.s1 += a[i];
    p.s2 += a[i] * a[i];
    const double* row = &A[static_cast<std::size_t>(i) * m];
    double acc = 0.0;
    for (int j = 0; j < m; ++j)
      acc += row[j] * a[j];
    p.aa[i] = acc;
  }
  p.q = 0.0;
  for (int i = 0; i < m; ++i)
    p.q += a[i] * p.aa[i];
  return p;
}

double f_from_parts(const ObjectiveParts& p, double gamma, int m)
{
  if (std::abs(p.s1) < 1e-12)
    throw ZeroMass("objective_f: coefficients sum to zero");
  // |s1|: the exponent 2 gamma + 2 acts as an even power, which keeps the
  // objective defined and scale-invariant for negative total mass as well
  return std::pow(static_cast<double>(m), gamma) * std::pow(p.s2, gamma) * p.q /
         std::pow(std::abs(p.s1), 2.0 * gamma + 2.0);
}

std::vector<double> grad_from_parts(const std::vector<double>& a,
                                    const ObjectiveParts& p, double gamma,
                                    int m)
{
  if (std::abs(p.s1) < 1e-12)
    throw ZeroMass("objective_gradient: coefficients sum to zero");
  const double mg = std::pow(static_cast<double>(m), gamma);
  const double s2g = std::pow(p.s2, gamma);
  const double s1p = std::pow(std::abs(p.s1), 2.0 * gamma + 2.0);
  const double sign = p.s1 > 0.0 ? 1.0 : -1.0;
  const double term2 = mg * s2g * p.q * (2.0 * gamma + 2.0) * sign /
                       std::pow(std::abs(p.s1), 2.0 * gamma + 3.0);
  std::vector<double> grad(m);
  for (int i = 0; i < m; ++i) {
    const double dnum = mg * (gamma * std::pow(p.s2, gamma - 1.0) * 2.0 * a[i] * p.q +
                              s2g * 2.0 * p.aa[i]);
    grad[i] = dnum / s1p - term2;
  }
  return grad;
}

void check_args(const std::vector<double>& a, int m)
{
  if (m < 1 || a.size() != static_cast<std::size_t>(m))
    throw std::invalid_argument("step-kernel objective: a must have length m");
}

} // namespace

double objective_f(const std::vector<double>& a, double gamma, int m)
{
  check_args(a, m);
  const std::vector<double> A = build_a_matrix(gamma, m);
  return f_from_parts(parts(a, A, m), gamma, m);
}

std::vector<double> objective_gradient(const std::vector<double>& a,
                                       double gamma, int m)
{
  check_args(a, m);
  const std::vector<double> A = build_a_matrix(gamma, m);
  return grad_from_parts(a, parts(a, A, m), gamma, m);
}

namespace {

struct RestartOutcome {
  std::vector<double> a;
  double objective = std::numeric_limits<double>::infinity();
};

RestartOutcome run_restart(const std::vector<double>& A, double gamma, int m,
                           std::uint64_t seed, std::uint64_t restart_index)
{
  RngStream rng(seed, restart_index);
  std::vector<double> a(m);
  for (int i = 0; i < m; ++i)
    a[i] = 1.0 - rng.uniform01(); // strictly positive start

  ObjectiveParts p = parts(a, A, m);
  double f = f_from_parts(p, gamma, m);

  std::vector<double> g = grad_from_parts(a, p, gamma, m);
  double gnorm = 0.0;
  for (double v : g)
    gnorm += v * v;
  gnorm = std::sqrt(gnorm);
  double step = gnorm > 0.0 ? 1.0 / gnorm : 1.0;

  std::vector<double> trial(m);
  for (int iter = 0; iter < 100000 && step >= 1e-10; ++iter) {
    for (int i = 0; i < m; ++i)
      trial[i] = a[i] - step * g[i];
    double mass = 0.0;
    for (double v : trial)
      mass += v;
    if (std::abs(mass) >= 1e-12) {
      const ObjectiveParts tp = parts(trial, A, m);
      const double ft = f_from_parts(tp, gamma, m);
      if (ft < f) {
        a.swap(trial);
        p = tp;
        f = ft;
        g = grad_from_parts(a, p, gamma, m);
        continue;
      }
    }
    step *= 0.5;
  }
  return { std::move(a), f };
}

} // namespace

namespace {

// Exact resampling of the [0,1] step function under K(x) -> K(x/c)/c, c >= 1.
std::vector<double> stretch_step(const std::vector<double>& a, double c)
{
  const int m = static_cast<int>(a.size());
  std::vector<double> out(m, 0.0);
  for (int i = 0; i < m; ++i) {
    const double lo = i / (static_cast<double>(m) * c);
    const double hi = (i + 1) / (static_cast<double>(m) * c);
    const int j_lo = static_cast<int>(lo * m);
    const int j_hi = std::min(m - 1, static_cast<int>(hi * m));
    double acc = 0.0;
    for (int j = j_lo; j <= j_hi; ++j) {
      const double bl = j / static_cast<double>(m);
      const double bh = (j + 1) / static_cast<double>(m);
      acc += a[j] * std::max(0.0, std::min(hi, bh) - std::max(lo, bl));
    }
    out[i] = acc * m;
  }
  return out;
}

} // namespace

StepKernel canonical_representative(const StepKernel& kernel, double rel_tol)
{
  if (kernel.m < 1 ||
      kernel.coeffs.size() != static_cast<std::size_t>(kernel.m))
    throw std::invalid_argument("canonical_representative: bad step kernel");
  const double f0 = objective_f(kernel.coeffs, kernel.gamma, kernel.m);
  auto within = [&](double c) {
    try {
      return objective_f(stretch_step(kernel.coeffs, c), kernel.gamma,
                         kernel.m) <= f0 * (1.0 + rel_tol);
    } catch (const ZeroMass&) {
      return false;
    }
  };
  double lo = 1.0, hi = 64.0;
  if (within(hi)) {
    lo = hi;
  } else {
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (within(mid) ? lo : hi) = mid;
    }
  }
  StepKernel out = kernel;
  out.coeffs = stretch_step(kernel.coeffs, lo);
  return out;
}

OptimizeResult optimize(double gamma, int m, int restarts, std::uint64_t seed)
{
  if (m < 8)
    throw std::invalid_argument("optimize: need m >= 8");
  if (restarts < 1)
    throw std::invalid_argument("optimize: need restarts >= 1");
  if (!(gamma >= 1.0 && gamma < 2.0))
    throw std::invalid_argument("optimize: gamma must lie in [1, 2)");

  const std::vector<double> A = build_a_matrix(gamma, m);
  std::vector<RestartOutcome> outcomes(restarts);

  unsigned workers = std::min<unsigned>(
    std::max(1u, std::thread::hardware_concurrency()),
    static_cast<unsigned>(restarts));
  std::vector<std::thread> pool;
  std::atomic<int> next{ 0 };
  auto work = [&]() {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= restarts)
        return;
      outcomes[r] = run_restart(A, gamma, m, seed, static_cast<std::uint64_t>(r));
    }
  };
  for (unsigned t = 1; t < workers; ++t)
    pool.emplace_back(work);
  work();
  for (auto& th : pool)
    th.join();

  OptimizeResult res;
  res.restart_objectives.resize(restarts);
  int best = 0;
  for (int r = 0; r < restarts; ++r) {
    res.restart_objectives[r] = outcomes[r].objective;
    if (outcomes[r].objective < outcomes[best].objective)
      best = r; // strict comparison: ties resolve to the lowest index
  }
  res.best_restart = best;
  res.objective = outcomes[best].objective;
  res.kernel.m = m;
  res.kernel.gamma = gamma;
  res.kernel.coeffs = std::move(outcomes[best].a);
  // Unit-integral normalization of the mirrored step kernel.
  double mass = 0.0;
  for (double v : res.kernel.coeffs)
    mass += v;
  const double scale = static_cast<double>(m) / (2.0 * mass);
  for (double& v : res.kernel.coeffs)
    v *= scale;
  return res;
}

} // namespace spotvol
