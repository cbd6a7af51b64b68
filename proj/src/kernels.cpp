#include "spotvol/kernels.hpp"

#include "spotvol/covariance.hpp"
#include "spotvol/errors.hpp"
#include "spotvol/quadrature.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace spotvol {

Kernel Kernel::exponential()
{
  Kernel k;
  k.kind_ = KernelKind::exponential;
  k.a_ = -std::numeric_limits<double>::infinity();
  k.b_ = std::numeric_limits<double>::infinity();
  return k;
}

Kernel Kernel::uniform()
{
  Kernel k;
  k.kind_ = KernelKind::uniform;
  k.a_ = -1.0;
  k.b_ = 1.0;
  return k;
}

Kernel Kernel::triangular()
{
  Kernel k;
  k.kind_ = KernelKind::triangular;
  k.a_ = -1.0;
  k.b_ = 1.0;
  return k;
}

Kernel Kernel::epanechnikov()
{
  Kernel k;
  k.kind_ = KernelKind::epanechnikov;
  k.a_ = -1.0;
  k.b_ = 1.0;
  return k;
}

Kernel Kernel::step(const std::vector<double>& coeffs)
{
  if (coeffs.empty())
    throw std::invalid_argument("step kernel needs at least one bin");
  double mass = 0.0;
  for (double a : coeffs)
    mass += a;
  if (std::abs(mass) < 1e-12)
    throw ZeroMass("step kernel coefficients sum to zero");
  Kernel k;
  k.kind_ = KernelKind::step;
  k.a_ = -1.0;
  k.b_ = 1.0;
  const double m = static_cast<double>(coeffs.size());
  k.coeffs_.resize(coeffs.size());
  // Mirrored to [-1,1]; unit integral requires 2 * sum(v_i) / m = 1.
  for (std::size_t i = 0; i < coeffs.size(); ++i)
    k.coeffs_[i] = coeffs[i] * m / (2.0 * mass);
  return k;
}

Kernel Kernel::custom(std::function<double(double)> fn, double a, double b,
                      bool symmetric, bool lipschitz)
{
  if (!(a < 0.0 && 0.0 < b))
    throw std::invalid_argument("custom kernel support must contain 0");
  Kernel k;
  k.kind_ = KernelKind::custom;
  k.fn_ = std::move(fn);
  k.a_ = a;
  k.b_ = b;
  k.symmetric_ = symmetric;
  k.lipschitz_ = lipschitz;
  return k;
}

double Kernel::operator()(double x) const
{
  switch (kind_) {
  case KernelKind::exponential:
    return 0.5 * std::exp(-std::abs(x));
  case KernelKind::uniform:
    return std::abs(x) < 1.0 ? 0.5 : 0.0;
  case KernelKind::triangular:
    return std::abs(x) < 1.0 ? 1.0 - std::abs(x) : 0.0;
  case KernelKind::epanechnikov:
    return std::abs(x) < 1.0 ? 0.75 * (1.0 - x * x) : 0.0;
  case KernelKind::order_p: {
    const double ax = std::abs(x);
    if (ax >= 1.0)
      return 0.0;
    const double c = (p_ + 1.0) / (2.0 * p_);
    return c * (1.0 - std::pow(ax, p_));
  }
  case KernelKind::constrained_order: {
    if (std::abs(x) > 1.0)
      return 0.0;
    const double x2 = x * x;
    double v = 0.0;
    for (std::size_t i = coeffs_.size(); i-- > 0;)
      v = v * x2 + coeffs_[i];
    return v;
  }
  case KernelKind::step: {
    const double ax = std::abs(x);
    if (ax >= 1.0)
      return 0.0;
    const auto m = coeffs_.size();
    auto bin = static_cast<std::size_t>(ax * static_cast<double>(m));
    if (bin >= m)
      bin = m - 1;
    return coeffs_[bin];
  }
  case KernelKind::custom:
    return (x > a_ && x < b_) ? fn_(x) : 0.0;
  }
  return 0.0;
}

bool Kernel::bounded_support() const
{
  return std::isfinite(a_) && std::isfinite(b_);
}

double Kernel::truncation_radius(double tail_eps) const
{
  if (bounded_support())
    return std::max(std::abs(a_), std::abs(b_));
  // exponential decay: |K| = e^{-|x|}/2 < eps beyond log(0.5/eps)
  return std::log(0.5 / tail_eps) + 5.0;
}

std::vector<double> Kernel::knots() const
{
  switch (kind_) {
  case KernelKind::exponential:
  case KernelKind::triangular:
  case KernelKind::order_p:
    return { 0.0 };
  case KernelKind::uniform:
  case KernelKind::epanechnikov:
  case KernelKind::constrained_order:
    return { -1.0, 0.0, 1.0 };
  case KernelKind::step: {
    std::vector<double> ks;
    const auto m = coeffs_.size();
    for (std::size_t i = 0; i <= m; ++i) {
      const double e = static_cast<double>(i) / static_cast<double>(m);
      ks.push_back(e);
      if (e != 0.0)
        ks.push_back(-e);
    }
    return ks;
  }
  case KernelKind::custom:
    return { 0.0 };
  }
  return {};
}

std::string Kernel::id() const
{
  switch (kind_) {
  case KernelKind::exponential:
    return "exponential";
  case KernelKind::uniform:
    return "uniform";
  case KernelKind::triangular:
    return "triangular";
  case KernelKind::epanechnikov:
    return "epanechnikov";
  case KernelKind::order_p:
    return "order_p:" + std::to_string(p_);
  case KernelKind::constrained_order:
    return "constrained:" + std::to_string(p_);
  case KernelKind::step:
    return "step:" + std::to_string(coeffs_.size());
  case KernelKind::custom:
    return "custom";
  }
  return "kernel";
}

namespace {

double quadrature_integral(const Kernel& k, const std::function<double(double)>& w,
                           double abs_tol = 1e-12)
{
  const double R = k.truncation_radius(1e-16);
  auto f = [&](double x) { return k(x) * w(x); };
  return quad::integrate(f, -R, R, abs_tol, k.knots());
}

} // namespace

double l2_norm(const Kernel& kernel)
{
  switch (kernel.kind()) {
  case KernelKind::exponential:
    return 0.25;
  case KernelKind::uniform:
    return 0.5;
  case KernelKind::triangular:
    return 2.0 / 3.0;
  case KernelKind::epanechnikov:
    return 0.6;
  case KernelKind::order_p: {
    const int p = kernel.order();
    const double c = (p + 1.0) / (2.0 * p);
    return 2.0 * c * c * (1.0 - 2.0 / (p + 1.0) + 1.0 / (2.0 * p + 1.0));
  }
  case KernelKind::constrained_order: {
    const auto& c = kernel.coeffs();
    double v = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t j = 0; j < c.size(); ++j)
        v += c[i] * c[j] / (2.0 * (i + j) + 1.0);
    return 2.0 * v;
  }
  case KernelKind::step: {
    const auto& v = kernel.coeffs();
    double s = 0.0;
    for (double a : v)
      s += a * a;
    return 2.0 * s / static_cast<double>(v.size());
  }
  case KernelKind::custom: {
    const double R = kernel.truncation_radius(1e-16);
    return quad::integrate([&](double x) { const double k = kernel(x); return k * k; },
                           -R, R, 1e-12, kernel.knots());
  }
  }
  return 0.0;
}

double moment(const Kernel& kernel, int p)
{
  if (p < 0)
    throw std::invalid_argument("moment order must be >= 0");
  if (kernel.symmetric() && p % 2 == 1)
    return 0.0;
  switch (kernel.kind()) {
  case KernelKind::exponential: {
    double fact = 1.0; // int_0^inf x^p e^{-x} = p!
    for (int i = 2; i <= p; ++i)
      fact *= i;
    return fact;
  }
  case KernelKind::uniform:
    return 1.0 / (p + 1.0);
  case KernelKind::triangular:
    return 2.0 * (1.0 / (p + 1.0) - 1.0 / (p + 2.0));
  case KernelKind::epanechnikov:
    return 1.5 * (1.0 / (p + 1.0) - 1.0 / (p + 3.0));
  case KernelKind::order_p: {
    const int q = kernel.order();
    const double c = (q + 1.0) / (2.0 * q);
    return 2.0 * c * (1.0 / (p + 1.0) - 1.0 / (p + q + 1.0));
  }
  case KernelKind::constrained_order: {
    const auto& c = kernel.coeffs();
    double v = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i)
      v += c[i] / (2.0 * static_cast<double>(i) + p + 1.0);
    return 2.0 * v;
  }
  case KernelKind::step: {
    const auto& v = kernel.coeffs();
    const auto m = v.size();
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double l = static_cast<double>(i) / static_cast<double>(m);
      const double r = static_cast<double>(i + 1) / static_cast<double>(m);
      s += v[i] * (std::pow(r, p + 1) - std::pow(l, p + 1)) / (p + 1.0);
    }
    return 2.0 * s;
  }
  case KernelKind::custom:
    return quadrature_integral(kernel, [p](double x) { return std::pow(x, p); });
  }
  return 0.0;
}

double survivor(const Kernel& kernel, double x)
{
  if (kernel.kind() == KernelKind::exponential)
    return x >= 0.0 ? 0.5 * std::exp(-x) : 1.0 - 0.5 * std::exp(x);
  const double R = kernel.truncation_radius(1e-16);
  if (x >= R)
    return 0.0;
  return quad::integrate([&](double u) { return kernel(u); }, x, R, 1e-12,
                         kernel.knots());
}

double bm_objective_I(const Kernel& kernel)
{
  return l2_norm(kernel) * quadratic_form(CovStructure::brownian_min(), kernel);
}

Kernel order_p_kernel(int p)
{
  if (p < 1)
    throw std::invalid_argument("order_p_kernel requires p >= 1");
  Kernel k;
  k.kind_ = KernelKind::order_p;
  k.a_ = -1.0;
  k.b_ = 1.0;
  k.p_ = p;
  return k;
}

Kernel constrained_order_kernel(int q)
{
  if (q < 2)
    throw std::invalid_argument("constrained_order_kernel requires q >= 2");

  // K(x) = a (x^{2q} + sum_{i<q} lambda_i x^{2i}) on [-1,1] subject to
  //   int_0^1 K x^{2r} = 0 (0 < r < q)  and  int_0^1 K = 1/2,
  // with the stationarity condition (4q+1) int_0^1 K x^{2q} + lambda_0/2 = 0.
  // The moment constraints fix lambda up to a one-dimensional family; the
  // stationarity condition reduces to a quadratic in the family parameter.
  using Mat = Eigen::MatrixXd;
  using Vec = Eigen::VectorXd;

  Mat m(q - 1, q);
  Vec rhs(q - 1);
  for (int r = 1; r < q; ++r) {
    for (int i = 0; i < q; ++i)
      m(r - 1, i) = 1.0 / (2.0 * (i + r) + 1.0);
    rhs(r - 1) = -1.0 / (2.0 * (q + r) + 1.0);
  }

  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(0) / sv(sv.size() - 1) > 1e12)
    throw SingularSystem("constrained order kernel: moment matrix condition "
                         "number exceeds 1e12");
  const Vec lam_p = svd.solve(rhs);
  const Vec lam_h = svd.matrixV().col(q - 1); // one-dimensional nullspace

  auto weighted = [&](const Vec& lam, auto weight) {
    double s = 0.0;
    for (int i = 0; i < q; ++i)
      s += lam(i) * weight(i);
    return s;
  };
  auto wa = [&](int i) { return 1.0 / (2.0 * (q + i) + 1.0); };
  auto wc = [&](int i) { return 1.0 / (2.0 * i + 1.0); };

  const double g = 4.0 * q + 1.0;
  const double ap = weighted(lam_p, wa), ah = weighted(lam_h, wa);
  const double cp = weighted(lam_p, wc), ch = weighted(lam_h, wc);
  // (4q+1)(1/(4q+1) + S_a) + lam0/(2q+1) + lam0 S_c = 0 along lam_p + t lam_h
  const double c0 = 1.0 + g * ap + lam_p(0) / (2.0 * q + 1.0) + lam_p(0) * cp;
  const double c1 = g * ah + lam_h(0) / (2.0 * q + 1.0) + lam_p(0) * ch +
                    lam_h(0) * cp;
  const double c2 = lam_h(0) * ch;

  std::vector<double> roots;
  if (std::abs(c2) < 1e-14) {
    if (std::abs(c1) < 1e-14)
      throw SingularSystem("constrained order kernel: degenerate stationarity");
    roots.push_back(-c0 / c1);
  } else {
    double disc = c1 * c1 - 4.0 * c2 * c0;
    const double scale = c1 * c1 + std::abs(4.0 * c2 * c0);
    if (disc < 0.0 && disc > -1e-10 * scale)
      disc = 0.0; // tangency root, see the q = 2 closed form
    if (disc < 0.0)
      throw SingularSystem("constrained order kernel: no real stationary point");
    const double sq = std::sqrt(disc);
    roots.push_back((-c1 + sq) / (2.0 * c2));
    roots.push_back((-c1 - sq) / (2.0 * c2));
  }

  double best_metric = std::numeric_limits<double>::infinity();
  std::vector<double> best_coeffs;
  for (double t : roots) {
    Vec lam = lam_p + t * lam_h;
    const double sc = 1.0 / (2.0 * q + 1.0) + weighted(lam, wc);
    if (std::abs(sc) < 1e-14)
      continue;
    const double a = 1.0 / (2.0 * sc);
    std::vector<double> coeffs(q + 1);
    for (int i = 0; i < q; ++i)
      coeffs[i] = a * lam(i);
    coeffs[q] = a;
    // selection metric (int K^2)^{2q} (int K x^{2q})^2 from the MSE expansion
    double l2h = 0.0;
    for (int i = 0; i <= q; ++i)
      for (int j = 0; j <= q; ++j)
        l2h += coeffs[i] * coeffs[j] / (2.0 * (i + j) + 1.0);
    double mq = 0.0;
    for (int i = 0; i <= q; ++i)
      mq += coeffs[i] / (2.0 * (i + q) + 1.0);
    const double metric = std::pow(l2h, 2 * q) * mq * mq;
    if (metric < best_metric) {
      best_metric = metric;
      best_coeffs = std::move(coeffs);
    }
  }
  if (best_coeffs.empty())
    throw SingularSystem("constrained order kernel: no admissible solution");

  Kernel k;
  k.kind_ = KernelKind::constrained_order;
  k.a_ = -1.0;
  k.b_ = 1.0;
  k.p_ = q;
  k.coeffs_ = std::move(best_coeffs);
  return k;
}

Kernel symmetrize(const Kernel& kernel)
{
  if (kernel.symmetric())
    return kernel;
  const double r = std::max(std::abs(kernel.support_left()),
                            std::abs(kernel.support_right()));
  Kernel base = kernel;
  return Kernel::custom(
    [base](double x) { return 0.5 * (base(x) + base(-x)); }, -r, r,
    /*symmetric=*/true, base.lipschitz_declared());
}

KernelConstants kernel_constants(const Kernel& kernel, const CovStructure& cov,
                                 int p)
{
  return { l2_norm(kernel), quadratic_form(cov, kernel), moment(kernel, p), p };
}

AdmissibilityReport check_admissible(const Kernel& kernel,
                                     const CovStructure& cov)
{
  AdmissibilityReport rep{};
  const double R = kernel.truncation_radius(1e-16);

  rep.integral = quad::integrate([&](double x) { return kernel(x); }, -R, R,
                                 1e-13, kernel.knots());
  rep.unit_integral = std::abs(rep.integral - 1.0) <= 1e-12;

  rep.lipschitz_bound = 0.0;
  if (kernel.kind() == KernelKind::step) {
    const auto& v = kernel.coeffs();
    const double m = static_cast<double>(v.size());
    double bound = std::abs(v.front()) * m; // jump at 0 is absent (mirror), at 1 counts
    for (std::size_t i = 0; i + 1 < v.size(); ++i)
      bound = std::max(bound, std::abs(v[i + 1] - v[i]) * m);
    bound = std::max(bound, std::abs(v.back()) * m);
    rep.lipschitz_bound = bound;
    rep.lipschitz_piecewise = std::isfinite(bound) && bound <= 1e6;
  } else {
    rep.lipschitz_piecewise = kernel.lipschitz_declared();
  }

  const double g = cov.gamma();
  if (kernel.bounded_support()) {
    rep.tails = true; // compact support settles all of condition (3)
  } else {
    const double tail_weight = std::abs(kernel(R)) * std::pow(R, g + 1.0);
    rep.tails = tail_weight < 1e-8;
  }

  rep.quad_form = quadratic_form(cov, kernel);
  rep.positive_quad_form = rep.quad_form > 1e-12;
  return rep;
}

Kernel read_step_kernel_csv(std::istream& in)
{
  std::string line;
  if (!std::getline(in, line))
    throw DataError("step kernel CSV: empty input");
  auto strip = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  {
    std::istringstream hs(line);
    std::string h1, h2;
    std::getline(hs, h1, ',');
    std::getline(hs, h2);
    if (strip(h1) != "x_left" || strip(h2) != "coeff")
      throw DataError("step kernel CSV: header must be 'x_left,coeff'");
  }
  std::vector<double> coeffs;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string s = strip(line);
    if (s.empty() || s[0] == '#')
      continue;
    std::istringstream ls(s);
    std::string f1, f2;
    if (!std::getline(ls, f1, ',') || !std::getline(ls, f2))
      throw DataError("step kernel CSV: malformed row at line " +
                      std::to_string(line_no));
    try {
      (void)std::stod(strip(f1));
      coeffs.push_back(std::stod(strip(f2)));
    } catch (const std::exception&) {
      throw DataError("step kernel CSV: bad number at line " +
                      std::to_string(line_no));
    }
  }
  if (coeffs.empty())
    throw DataError("step kernel CSV: no coefficient rows");
  return Kernel::step(coeffs);
}

void write_step_kernel_csv(std::ostream& out, const Kernel& kernel,
                           std::optional<double> objective)
{
  if (kernel.kind() != KernelKind::step)
    throw std::invalid_argument("write_step_kernel_csv: not a step kernel");
  const auto& v = kernel.coeffs();
  const auto m = v.size();
  out << "x_left,coeff\n";
  out.precision(17);
  for (std::size_t i = 0; i < m; ++i)
    out << static_cast<double>(i) / static_cast<double>(m) << "," << v[i] << "\n";
  if (objective)
    out << "# objective: " << *objective << "\n";
}

Kernel kernel_by_name(const std::string& name)
{
  if (name == "exponential" || name == "exp")
    return Kernel::exponential();
  if (name == "uniform" || name == "unif")
    return Kernel::uniform();
  if (name == "triangular" || name == "tri")
    return Kernel::triangular();
  if (name == "epanechnikov" || name == "epan")
    return Kernel::epanechnikov();
  const auto colon = name.find(':');
  if (colon != std::string::npos) {
    const std::string head = name.substr(0, colon);
    int arg = 0;
    try {
      arg = std::stoi(name.substr(colon + 1));
    } catch (const std::exception&) {
      throw ConfigError("bad kernel parameter in '" + name + "'");
    }
    if (head == "order_p")
      return order_p_kernel(arg);
    if (head == "constrained")
      return constrained_order_kernel(arg);
  }
  throw ConfigError("unknown kernel '" + name + "'");
}

} // namespace spotvol
