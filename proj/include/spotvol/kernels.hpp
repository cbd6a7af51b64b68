#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace spotvol {

class CovStructure;

enum class KernelKind {
  exponential,       // e^{-|x|}/2
  uniform,           // 1{|x|<1}/2
  triangular,        // (1-|x|) 1{|x|<1}
  epanechnikov,      // 3(1-x^2)/4 1{|x|<1}
  order_p,           // (p+1)/(2p) (1-|x|^p) 1{|x|<1}
  constrained_order, // even polynomial of order 2q with vanishing low moments
  step,              // piecewise constant on [0,1], mirrored to [-1,1]
  custom             // arbitrary callable on an interval
};

//! A kernel weight function with unit integral. Values are immutable after
//! construction and safe for concurrent reads. The scaling convention used
//! everywhere is K_h(x) = K(x/h)/h.
class Kernel {
public:
  static Kernel exponential();
  static Kernel uniform();
  static Kernel triangular();
  static Kernel epanechnikov();

  //! Piecewise-constant kernel from bin coefficients on [0,1], mirrored to
  //! [-1,1] and normalized to unit integral at construction.
  //! Throws ZeroMass when the coefficients sum to (numerically) zero.
  static Kernel step(const std::vector<double>& coeffs);

  //! Arbitrary kernel on support (a, b). `symmetric` and `lipschitz` are
  //! structural declarations used by the admissibility report.
  static Kernel custom(std::function<double(double)> fn, double a, double b,
                       bool symmetric = false, bool lipschitz = true);

  double operator()(double x) const;

  KernelKind kind() const { return kind_; }
  double support_left() const { return a_; }
  double support_right() const { return b_; }
  bool bounded_support() const;
  bool symmetric() const { return symmetric_; }
  bool lipschitz_declared() const { return lipschitz_; }
  int order() const { return p_; }

  //! Radius beyond which |K| stays below tail_eps (support bound when finite).
  double truncation_radius(double tail_eps = 1e-14) const;

  //! Interior breakpoints of K (bin edges, |x| kinks); aids quadrature.
  std::vector<double> knots() const;

  //! Normalized step/polynomial coefficients (empty for other kinds).
  const std::vector<double>& coeffs() const { return coeffs_; }

  std::string id() const;

private:
  friend Kernel order_p_kernel(int p);
  friend Kernel constrained_order_kernel(int q);

  Kernel() = default;

  KernelKind kind_ = KernelKind::exponential;
  double a_ = 0.0, b_ = 0.0; // support
  int p_ = 0;                // order parameter (order_p: p, constrained: q)
  std::vector<double> coeffs_;
  std::function<double(double)> fn_;
  bool symmetric_ = true;
  bool lipschitz_ = true;
};

//! Full-line L2 norm integral K^2; closed form for built-ins, quadrature else.
double l2_norm(const Kernel& kernel);

//! Full-line moment integral K(x) x^p dx.
double moment(const Kernel& kernel, int p);

//! Survivor function L(x) = int_x^inf K(u) du (diagnostics).
double survivor(const Kernel& kernel, double x);

//! Objective I(K) = (int K^2) (iint K K C_1) for Brownian-driven volatility.
//! The optimal admissible kernel attains 1/16 (exponential).
double bm_objective_I(const Kernel& kernel);

//! K_p(x) = (p+1)/(2p) (1 - |x|^p) on [-1,1]; p = 2 is the Epanechnikov kernel.
Kernel order_p_kernel(int p);

//! Even polynomial kernel of order 2q on [-1,1] with x^{2r} moments vanishing
//! for 0 < r < q, obtained from the stationarity system of the constrained
//! variational problem. Throws SingularSystem when the moment matrix is
//! numerically singular (condition number > 1e12) or no stationary point exists.
Kernel constrained_order_kernel(int q);

//! K_s(x) = (K(x) + K(-x))/2; returns the input unchanged when already symmetric.
Kernel symmetrize(const Kernel& kernel);

struct KernelConstants {
  double l2_norm;        // int K^2
  double cov_functional; // iint K K C_gamma
  double moment_p;       // int K x^p
  int p;
};

KernelConstants kernel_constants(const Kernel& kernel, const CovStructure& cov,
                                 int p = 2);

struct AdmissibilityReport {
  bool unit_integral;       // (1) int K = 1
  bool lipschitz_piecewise; // (2) Lipschitz, piecewise C1
  bool tails;               // (3) |K||x|^gamma integrable, K x^{gamma+1} -> 0
  bool positive_quad_form;  // (4) iint K K C_gamma > 0
  double integral;
  double quad_form;
  double lipschitz_bound;   // finite-difference bound (step kernels)
  bool all() const
  {
    return unit_integral && lipschitz_piecewise && tails && positive_quad_form;
  }
};

//! Per-condition check of the kernel admissibility assumptions against a
//! covariance structure. Failures are report entries, not errors.
AdmissibilityReport check_admissible(const Kernel& kernel,
                                     const CovStructure& cov);

//! Step-kernel CSV: header "x_left,coeff", one row per bin; trailing comment
//! lines of the form "# key: value" are ignored on read.
Kernel read_step_kernel_csv(std::istream& in);
void write_step_kernel_csv(std::ostream& out, const Kernel& kernel,
                           std::optional<double> objective = std::nullopt);

//! Kernel by name: "exponential", "uniform", "triangular", "epanechnikov",
//! "order_p:<p>", "constrained:<q>". Throws ConfigError on unknown names.
Kernel kernel_by_name(const std::string& name);

} // namespace spotvol
