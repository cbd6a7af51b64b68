#pragma once

#include <cstdint>
#include <vector>

namespace spotvol {

class Kernel;

enum class CovKind {
  brownian_min,        // gamma = 1,  C(r,s) = min(|r|,|s|) 1{rs >= 0}
  fractional_bm,       // gamma = 2H, C(r,s) = (|r|^g + |s|^g - |r-s|^g)/2
  deterministic_smooth,// gamma = 2m, C(r,s) = r^m s^m
  tabulated            // bilinear interpolation on a grid
};

//! Homogeneous covariance structure C_gamma of the variance process's local
//! increments: C(hr, hs) = h^gamma C(r, s). Immutable; thread-safe to read.
class CovStructure {
public:
  static CovStructure brownian_min();
  static CovStructure fractional_bm(double hurst);       // H in (1/2, 1)
  static CovStructure deterministic_smooth(int m);       // m >= 1
  //! Grid-tabulated structure; evaluates by bilinear interpolation, clamped
  //! to the grid hull. `values[i][j]` is C(grid[i], grid[j]).
  static CovStructure tabulated(std::vector<double> grid,
                                std::vector<std::vector<double>> values,
                                double gamma);

  CovKind kind() const { return kind_; }
  double gamma() const { return gamma_; }
  double hurst() const { return hurst_; }
  int smooth_order() const { return m_; }

  double operator()(double r, double s) const;

private:
  CovStructure() = default;

  CovKind kind_ = CovKind::brownian_min;
  double gamma_ = 1.0;
  double hurst_ = 0.5;
  int m_ = 1;
  std::vector<double> grid_;
  std::vector<std::vector<double>> values_;
};

//! C_gamma(r, s) per the structure's closed form (total function).
double c_gamma_eval(const CovStructure& cov, double r, double s);

//! The kernel functional  iint K(x) K(y) C_gamma(x, y) dx dy  over the whole
//! plane. Closed form where available, else adaptive 2-d quadrature to 1e-10
//! absolute. Throws QuadratureFailed if the budget is exhausted.
double quadratic_form(const CovStructure& cov, const Kernel& kernel);

//! Normalized quadratic form  sum_ij c_i c_j C(x_i, x_j) / |c|^2  on a node set.
double normalized_quad_form(const CovStructure& cov,
                            const std::vector<double>& nodes,
                            const std::vector<double>& coeffs);

struct MinQuadFormReport {
  double min_value;     // minimum normalized quadratic form over the trials
  int trials;
  std::vector<double> argmin_coeffs;
};

//! Randomized check of integral non-negative definiteness on a node set:
//! draws `trials` Gaussian coefficient vectors and reports the minimum of the
//! normalized quadratic form. Valid structures stay >= -1e-9.
MinQuadFormReport nn_definiteness_check(const CovStructure& cov,
                                        const std::vector<double>& nodes,
                                        int trials, std::uint64_t rng_seed);

} // namespace spotvol
