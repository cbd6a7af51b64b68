#pragma once

#include "spotvol/estimator.hpp"

#include <vector>

namespace spotvol {

class Kernel;
class CovStructure;

//! Asymptotic-variance constants of the two error CLTs:
//! discretization error ~ delta1 * sqrt(Delta/h) and smoothing error
//! ~ delta2 * h^{gamma/2}.
struct CltConstants {
  double delta1_sq = 0.0; // 2 sigma_tau^4 int K^2
  double delta2_sq = 0.0; // g_tau^2 iint K K C_gamma
  double rate_discr = 0.0;  // sqrt(Delta / h)
  double rate_smooth = 0.0; // h^{gamma/2}

  double total_se() const;
};

//! Fills the constants at one evaluation point. sigma2_tau is the spot
//! variance, g_tau_sq the (squared) vol-of-vol at tau.
CltConstants clt_constants(double sigma2_tau, double g_tau_sq,
                           const Kernel& kernel, const CovStructure& cov,
                           double h, double delta);

//! Standard normal quantile (bisection on erfc; |z| accurate to ~1e-12).
double normal_quantile(double p);

struct ConfidenceBands {
  std::vector<double> lo;
  std::vector<double> hi;
  double level = 0.95;
  bool g_sq_is_proxy = true; // g^2 substituted by the integrated average IVV/T
};

//! Conditional confidence bands around a spot-variance series using a single
//! g^2 value (typically the integrated-average proxy IVV / T).
ConfidenceBands confidence_bands(const SpotVolSeries& series, double level,
                                 double g_sq, const Kernel& kernel,
                                 const CovStructure& cov, bool g_sq_is_proxy);

} // namespace spotvol
