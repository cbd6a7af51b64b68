#include "spotvol/covariance.hpp"

#include "spotvol/errors.hpp"
#include "spotvol/kernels.hpp"
#include "spotvol/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>

namespace spotvol {

CovStructure CovStructure::brownian_min()
{
  CovStructure c;
  c.kind_ = CovKind::brownian_min;
  c.gamma_ = 1.0;
  return c;
}

CovStructure CovStructure::fractional_bm(double hurst)
{
  if (!(hurst > 0.5 && hurst < 1.0))
    throw std::invalid_argument("fractional_bm requires H in (1/2, 1)");
  CovStructure c;
  c.kind_ = CovKind::fractional_bm;
  c.hurst_ = hurst;
  c.gamma_ = 2.0 * hurst;
  return c;
}

CovStructure CovStructure::deterministic_smooth(int m)
{
  if (m < 1)
    throw std::invalid_argument("deterministic_smooth requires m >= 1");
  CovStructure c;
  c.kind_ = CovKind::deterministic_smooth;
  c.m_ = m;
  c.gamma_ = 2.0 * m;
  return c;
}

CovStructure CovStructure::tabulated(std::vector<double> grid,
                                     std::vector<std::vector<double>> values,
                                     double gamma)
{
  if (grid.size() < 2 || values.size() != grid.size())
    throw std::invalid_argument("tabulated: grid/value shape mismatch");
  for (const auto& row : values)
    if (row.size() != grid.size())
      throw std::invalid_argument("tabulated: value matrix must be square");
  if (!std::is_sorted(grid.begin(), grid.end()))
    throw std::invalid_argument("tabulated: grid must be ascending");
  CovStructure c;
  c.kind_ = CovKind::tabulated;
  c.gamma_ = gamma;
  c.grid_ = std::move(grid);
  c.values_ = std::move(values);
  return c;
}

namespace {

// Clamped bracket index for bilinear interpolation.
std::size_t locate(const std::vector<double>& g, double x)
{
  if (x <= g.front())
    return 0;
  if (x >= g[g.size() - 2])
    return g.size() - 2;
  return static_cast<std::size_t>(
           std::upper_bound(g.begin(), g.end(), x) - g.begin()) - 1;
}

} // namespace

double CovStructure::operator()(double r, double s) const
{
  switch (kind_) {
  case CovKind::brownian_min:
    // 1{rs >= 0} closed at zero keeps C_1 continuous along the axes.
    if (r * s < 0.0)
      return 0.0;
    return std::min(std::abs(r), std::abs(s));
  case CovKind::fractional_bm: {
    const double g = gamma_;
    return 0.5 * (std::pow(std::abs(r), g) + std::pow(std::abs(s), g) -
                  std::pow(std::abs(r - s), g));
  }
  case CovKind::deterministic_smooth: {
    double rm = 1.0, sm = 1.0;
    for (int i = 0; i < m_; ++i) {
      rm *= r;
      sm *= s;
    }
    return rm * sm;
  }
  case CovKind::tabulated: {
    const double rc = std::clamp(r, grid_.front(), grid_.back());
    const double sc = std::clamp(s, grid_.front(), grid_.back());
    const std::size_t i = locate(grid_, rc);
    const std::size_t j = locate(grid_, sc);
    const double tx = (rc - grid_[i]) / (grid_[i + 1] - grid_[i]);
    const double ty = (sc - grid_[j]) / (grid_[j + 1] - grid_[j]);
    return (1 - tx) * (1 - ty) * values_[i][j] + tx * (1 - ty) * values_[i + 1][j] +
           (1 - tx) * ty * values_[i][j + 1] + tx * ty * values_[i + 1][j + 1];
  }
  }
  return 0.0;
}

double c_gamma_eval(const CovStructure& cov, double r, double s)
{
  return cov(r, s);
}

namespace {

// Memo for the quadrature-backed functionals: a pure function of immutable
// inputs, so duplicated computations agree and the cache is idempotent.
// Custom kernels are not keyable (arbitrary callables) and skip the cache.
std::mutex quad_form_mutex;
std::map<std::string, double> quad_form_cache;

std::string quad_form_key(const CovStructure& cov, const Kernel& k)
{
  if (k.kind() == KernelKind::custom || cov.kind() == CovKind::tabulated)
    return {};
  std::ostringstream os;
  os.precision(17);
  os << static_cast<int>(cov.kind()) << "|" << cov.gamma() << "|" << k.id();
  for (double c : k.coeffs())
    os << "," << c;
  return os.str();
}

// Generic kernel functional over [-R, R]^2 by iterated adaptive quadrature.
// Splits the inner integrals at the kernel knots and at the C_gamma kinks
// (axes, and the diagonal x = y for fBM / BrownianMin).
double quad_form_2d(const CovStructure& cov, const Kernel& k, double abs_tol)
{
  const double R = k.truncation_radius(1e-14);
  std::vector<double> base = k.knots();
  base.push_back(0.0);

  auto x_splits = [&](double y) {
    std::vector<double> s = base;
    s.push_back(y); // diagonal kink of |x - y| and min(x, y)
    return s;
  };
  auto f = [&](double x, double y) { return k(x) * k(y) * cov(x, y); };
  return quad::integrate_2d(f, -R, R, -R, R, abs_tol, x_splits, base);
}

} // namespace

double quadratic_form(const CovStructure& cov, const Kernel& kernel)
{
  switch (cov.kind()) {
  case CovKind::deterministic_smooth: {
    // iint K(x)K(y) x^m y^m = (int K x^m)^2
    const double mom = moment(kernel, cov.smooth_order());
    return mom * mom;
  }
  case CovKind::brownian_min:
    switch (kernel.kind()) {
    case KernelKind::exponential:
      return 0.25;
    case KernelKind::uniform:
      return 1.0 / 6.0;
    case KernelKind::triangular:
      return 0.1;
    case KernelKind::epanechnikov:
      return 33.0 / 280.0;
    default:
      break;
    }
    break;
  default:
    break;
  }

  const std::string key = quad_form_key(cov, kernel);
  if (!key.empty()) {
    std::lock_guard<std::mutex> lk(quad_form_mutex);
    if (const auto it = quad_form_cache.find(key); it != quad_form_cache.end())
      return it->second;
  }
  const double value = quad_form_2d(cov, kernel, 1e-10);
  if (!key.empty()) {
    std::lock_guard<std::mutex> lk(quad_form_mutex);
    quad_form_cache.emplace(key, value);
  }
  return value;
}

double normalized_quad_form(const CovStructure& cov,
                            const std::vector<double>& nodes,
                            const std::vector<double>& coeffs)
{
  if (nodes.size() != coeffs.size() || nodes.empty())
    throw std::invalid_argument("normalized_quad_form: size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    den += coeffs[i] * coeffs[i];
    for (std::size_t j = 0; j < nodes.size(); ++j)
      num += coeffs[i] * coeffs[j] * cov(nodes[i], nodes[j]);
  }
  if (den == 0.0)
    throw std::invalid_argument("normalized_quad_form: zero coefficient vector");
  return num / den;
}

MinQuadFormReport nn_definiteness_check(const CovStructure& cov,
                                        const std::vector<double>& nodes,
                                        int trials, std::uint64_t rng_seed)
{
  if (trials < 1)
    throw std::invalid_argument("nn_definiteness_check: trials must be >= 1");
  const std::size_t n = nodes.size();
  std::vector<std::vector<double>> gram(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      gram[i][j] = cov(nodes[i], nodes[j]);

  std::mt19937_64 gen(rng_seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  MinQuadFormReport report;
  report.trials = trials;
  report.min_value = std::numeric_limits<double>::infinity();
  std::vector<double> c(n);
  for (int t = 0; t < trials; ++t) {
    double den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      c[i] = normal(gen);
      den += c[i] * c[i];
    }
    if (den == 0.0)
      continue;
    double num = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        num += c[i] * c[j] * gram[i][j];
    const double v = num / den;
    if (v < report.min_value) {
      report.min_value = v;
      report.argmin_coeffs = c;
    }
  }
  return report;
}

} // namespace spotvol
