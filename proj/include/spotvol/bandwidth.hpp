#pragma once

#include "spotvol/estimator.hpp"

#include <string>
#include <utility>
#include <vector>

namespace spotvol {

class Kernel;
class CovStructure;

//! Moment inputs of the bandwidth formulas: either pointwise (E[sigma_tau^4],
//! L(tau)) or integrated (int E[sigma_t^4] dt, int L(t) dt).
struct VolModelMoments {
  double e_sigma4 = 0.0;
  double l_scale = 0.0;
};

//! Leading-order MSE approximation
//!   2 (Delta/h) E[sigma^4] int K^2  +  h^gamma L iint K K C_gamma.
double approx_mse(double h, double delta, const VolModelMoments& moments,
                  const Kernel& kernel, const CovStructure& cov);

//! Closed-form minimizer of approx_mse in h. Throws NonpositiveDenominator
//! when l_scale or the kernel functional is not positive.
double optimal_bandwidth_local(int n, double T, const VolModelMoments& moments,
                               const Kernel& kernel, const CovStructure& cov);

//! The attained minimum of approx_mse at the optimal bandwidth.
double optimal_mse_value(int n, double T, const VolModelMoments& moments,
                         const Kernel& kernel, const CovStructure& cov);

//! Homogeneous (IMSE-minimizing) bandwidth; identical formula with
//! integrated moments.
double optimal_bandwidth_global(int n, double T,
                                const VolModelMoments& integrated_moments,
                                const Kernel& kernel, const CovStructure& cov);

//! Data-free initial guess sqrt(2 T int K^2 / (n iint K K C_1)) (gamma = 1).
double initial_bandwidth(int n, double T, const Kernel& kernel,
                         const CovStructure& cov);

enum class BandwidthMethod { initial, plugin, cross_validation, oracle, fixed };

struct PluginIteration {
  double h;
  double iq_hat;  // realized quarticity
  double ivv_hat; // TSRVV at the previous bandwidth
};

struct BandwidthPlan {
  double h = 0.0;
  BandwidthMethod provenance = BandwidthMethod::initial;
  int iterations = 0;
  std::vector<PluginIteration> history;
  double cv_objective = 0.0; // selected-grid-point objective (CV only)
};

struct PluginOptions {
  int max_iter = 2;
  double rel_tol = 0.01;
  int k = 0; // TSRVV coarse scale; 0 selects round(n^{2/3})
  int b = 0; // TSRVV boundary trim; 0 selects max(1, round(0.05 n))
};

//! Iterative plug-in bandwidth selection (BM-type volatility, gamma = 1):
//! start from the initial guess, alternate grid estimation and the
//! quarticity/TSRVV plug-in formula until |h_{k+1} - h_k| <= rel_tol h_k or
//! max_iter. Returns the plan and the final boundary-corrected series.
//! Throws VolVolDegenerate when TSRVV is zero even after its fallback
//! (callers should keep the initial bandwidth).
std::pair<BandwidthPlan, SpotVolSeries> plugin_select(const PricePath& path,
                                                      const Kernel& kernel,
                                                      const CovStructure& cov,
                                                      const PluginOptions& opt = {});

//! Leave-one-out cross validation over a bandwidth grid: minimizes
//!   sum_i [ (Delta_i X)^2 / Delta - sigma2_{-i}(t_{i-1}; h) ]^2
//! over the trimmed interior, where the estimate at t_{i-1} excludes
//! increment i from both the numerator and the normalizer.
BandwidthPlan cross_validate(const PricePath& path, const Kernel& kernel,
                             const std::vector<double>& h_grid,
                             double trim = 0.1);

//! Log-spaced grid helper "lo:hi:count".
std::vector<double> log_bandwidth_grid(double lo, double hi, int count);

} // namespace spotvol
