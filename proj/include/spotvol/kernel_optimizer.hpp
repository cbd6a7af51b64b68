#pragma once

#include "spotvol/kernels.hpp"

#include <cstdint>
#include <vector>

namespace spotvol {

//! Step-function parameterization of a symmetric kernel on [-1,1]: m bins on
//! [0,1], mirrored. `gamma` is the target covariance exponent in [1, 2).
struct StepKernel {
  int m = 0;
  std::vector<double> coeffs; // raw bin coefficients a_1..a_m
  double gamma = 1.0;

  //! Normalized unit-integral kernel built from the coefficients.
  Kernel to_kernel() const { return Kernel::step(coeffs); }
};

//! Discretized objective
//!   f(a) = m^gamma (sum a_i^2)^gamma (sum_ij a_i a_j A_ij) / (sum a_i)^{2 gamma + 2}
//! with A_ij = |x_i|^g + |x_j|^g - |x_i+x_j|^g / 2 - |x_i-x_j|^g / 2 and
//! x_i = (i - 0.5) / m. Scale-invariant: f(c a) = f(a). Throws ZeroMass when
//! |sum a_i| < 1e-12.
double objective_f(const std::vector<double>& a, double gamma, int m);

//! Analytic gradient of objective_f (quotient rule).
std::vector<double> objective_gradient(const std::vector<double>& a,
                                       double gamma, int m);

struct OptimizeResult {
  StepKernel kernel;
  double objective = 0.0;
  int best_restart = 0;
  std::vector<double> restart_objectives;
};

//! Gradient descent with step halving and random restarts: each restart
//! starts from a_i ~ U(0,1], accepts a step when f decreases along -grad f
//! and halves the step otherwise, stopping below step 1e-10 or at 1e5
//! iterations. Deterministic given (gamma, m, restarts, seed); restarts run
//! concurrently on independent substreams and ties resolve by restart index.
OptimizeResult optimize(double gamma, int m, int restarts, std::uint64_t seed);

//! The objective is invariant under the support rescaling K(x) -> c K(c x),
//! so the discretized minimizer is one member of a nearly flat family whose
//! effective support depends on the bin resolution. This returns the
//! maximal-support member whose objective stays within rel_tol of the input's
//! (exact interval-overlap resampling of the step function); shapes of optima
//! for different gamma are comparable only through this representative.
StepKernel canonical_representative(const StepKernel& kernel,
                                    double rel_tol = 0.02);

} // namespace spotvol
