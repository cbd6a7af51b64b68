#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spotvol/errors.hpp"
#include "spotvol/kernel_optimizer.hpp"
#include "spotvol/quadrature.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace spotvol;

namespace {

std::vector<double> random_coeffs(int m, std::uint64_t seed)
{
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> a(m);
  for (double& v : a)
    v = u(gen);
  return a;
}

std::vector<double> discretized_exponential(int m)
{
  std::vector<double> a(m);
  for (int i = 0; i < m; ++i)
    a[i] = 0.5 * std::exp(-(i + 0.5) / m);
  return a;
}

// Continuum objective of a truncated [0,1]-supported symmetric kernel under
// the fBM functional, in the same normalization as objective_f:
// f = 2^{2g+2} (int_0^1 K^2)^g iint_0^1 K K D with int_0^1 K = 1/2.
double continuum_objective(const std::function<double(double)>& k_raw,
                           double gamma)
{
  const double z =
    quad::integrate([&](double x) { return k_raw(x); }, 0.0, 1.0, 1e-12);
  auto k = [&](double x) { return k_raw(x) / (2.0 * z); }; // int_0^1 K = 1/2
  const double l2 = quad::integrate([&](double x) { return k(x) * k(x); }, 0.0,
                                    1.0, 1e-12);
  auto d_fun = [&](double x, double y) {
    return std::pow(x, gamma) + std::pow(y, gamma) -
           0.5 * std::pow(x + y, gamma) -
           0.5 * std::pow(std::abs(x - y), gamma);
  };
  auto xsplits = [](double y) { return std::vector<double>{ y }; };
  const double qf = quad::integrate_2d(
    [&](double x, double y) { return k(x) * k(y) * d_fun(x, y); }, 0.0, 1.0,
    0.0, 1.0, 1e-11, xsplits);
  return std::pow(2.0, 2.0 * gamma + 2.0) * std::pow(l2, gamma) * qf;
}

} // namespace

TEST_CASE("objective: scale invariance and zero-mass guard")
{
  const int m = 32;
  const std::vector<double> a = random_coeffs(m, 1);
  const double f = objective_f(a, 1.4, m);
  for (double c : { -2.0, 0.5, 10.0 }) {
    std::vector<double> b = a;
    for (double& v : b)
      v *= c;
    CHECK(objective_f(b, 1.4, m) == doctest::Approx(f).epsilon(1e-12));
  }
  std::vector<double> zero(m, 0.0);
  CHECK_THROWS_AS(objective_f(zero, 1.4, m), ZeroMass);
}

TEST_CASE("objective: single bin closed form")
{
  for (double g : { 1.0, 1.3, 1.9 }) {
    // m = 1, x_1 = 1/2: f = A_11 = 2 (1/2)^g - 1/2
    const double expect = 2.0 * std::pow(0.5, g) - 0.5;
    CHECK(objective_f({ 3.7 }, g, 1) == doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("objective at the discretized exponential approximates the continuum")
{
  const int m = 128;
  const std::vector<double> a = discretized_exponential(m);
  const double f = objective_f(a, 1.0, m);
  const double cont =
    continuum_objective([](double x) { return 0.5 * std::exp(-x); }, 1.0);
  CHECK(std::abs(f - cont) / cont < 0.10);
  // continuum value for the untruncated optimum is 2^4/16 = 1/4 * 4 = ...
  // the truncated value sits near but not at 4 * 1/16
  CHECK(cont == doctest::Approx(4.0 * 0.0625).epsilon(0.15));
}

TEST_CASE("gradient matches central finite differences")
{
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> gpick(1.0, 1.95);
  for (int t = 0; t < 50; ++t) {
    const int m = 16;
    const double gamma = gpick(gen);
    const std::vector<double> a = random_coeffs(m, 100 + t);
    const std::vector<double> grad = objective_gradient(a, gamma, m);
    double norm = 0.0;
    for (double v : a)
      norm += v * v;
    const double eps = 1e-6 * std::sqrt(norm);
    for (int i = 0; i < m; i += 3) {
      std::vector<double> up = a, dn = a;
      up[i] += eps;
      dn[i] -= eps;
      const double fd =
        (objective_f(up, gamma, m) - objective_f(dn, gamma, m)) / (2.0 * eps);
      CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("Euler identity: gradient is orthogonal to the point")
{
  // degree-0 homogeneity forces a . grad f = 0
  for (int t = 0; t < 10; ++t) {
    const int m = 24;
    const std::vector<double> a = random_coeffs(m, 500 + t);
    const std::vector<double> g = objective_gradient(a, 1.6, m);
    double dot = 0.0, scale = 0.0;
    for (int i = 0; i < m; ++i) {
      dot += a[i] * g[i];
      scale += std::abs(a[i] * g[i]);
    }
    CHECK(std::abs(dot) <= 1e-12 * std::max(1.0, scale));
  }
}

TEST_CASE("optimize: determinism, descent, and benchmark quality")
{
  const OptimizeResult r1 = optimize(1.0, 64, 4, 2024);
  const OptimizeResult r2 = optimize(1.0, 64, 4, 2024);
  CHECK(r1.objective == r2.objective);
  CHECK(r1.kernel.coeffs == r2.kernel.coeffs); // bitwise reproducible

  // every restart ended at or below the discretized-uniform comparator
  const double f_uniform = objective_f(std::vector<double>(64, 1.0), 1.0, 64);
  CHECK(r1.objective <= f_uniform);

  // monotone non-increasing shape for gamma = 1 (exponential-like optimum)
  const auto& a = r1.kernel.coeffs;
  int violations = 0;
  for (std::size_t i = 0; i + 1 < a.size(); ++i)
    if (a[i + 1] > a[i] + 1e-6)
      ++violations;
  CHECK(violations <= 2);

  // unit integral of the mirrored step kernel after normalization
  double mass = 0.0;
  for (double v : a)
    mass += v;
  CHECK(2.0 * mass / 64.0 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("optimize: gamma = 1 at m = 128 approaches the truncated-exponential benchmark")
{
  const OptimizeResult res = optimize(1.0, 128, 6, 7);
  const double bench = objective_f(discretized_exponential(128), 1.0, 128);
  CHECK(res.objective <= bench * 1.02);
  // the optimizer may beat the truncated benchmark along the support-scaling
  // family, but never the continuum bound 16 I(exp) = 1/4
  CHECK(res.objective >= 0.25 * (1.0 - 1e-9));
}

TEST_CASE("optimize: higher gamma flattens the canonical optimum")
{
  // shapes compare through the maximal-support representative; the raw
  // minimizer's effective support depends on the bin resolution
  const StepKernel lo = canonical_representative(optimize(1.3, 64, 6, 11).kernel);
  const StepKernel hi = canonical_representative(optimize(1.9, 64, 6, 11).kernel);
  const double ratio_lo = lo.coeffs.front() / lo.coeffs.back();
  const double ratio_hi = hi.coeffs.front() / hi.coeffs.back();
  CHECK(ratio_hi < ratio_lo);
  CHECK(hi.coeffs.front() < lo.coeffs.front()); // flatter start
  CHECK(hi.coeffs.back() > lo.coeffs.back());   // heavier tail
}

TEST_CASE("canonical representative preserves the objective to tolerance")
{
  const OptimizeResult r = optimize(1.5, 64, 4, 3);
  const StepKernel canon = canonical_representative(r.kernel, 0.02);
  const double f_raw = objective_f(r.kernel.coeffs, 1.5, 64);
  const double f_canon = objective_f(canon.coeffs, 1.5, 64);
  CHECK(f_canon <= f_raw * 1.0201);
  CHECK(f_canon >= f_raw);
  // the representative spreads mass toward the full support
  CHECK(canon.coeffs.back() >= r.kernel.coeffs.back());
}
