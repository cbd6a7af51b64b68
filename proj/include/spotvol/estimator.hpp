#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace spotvol {

class Kernel;

//! Uniformly spaced log-price observations X_{t_0}, ..., X_{t_n} on [0, T]
//! with t_i = i T / n. Immutable after construction.
struct PricePath {
  double horizon = 0.0;            // T in year-fraction units
  std::vector<double> log_prices;  // n + 1 values

  PricePath() = default;
  PricePath(double T, std::vector<double> x);

  int n() const { return static_cast<int>(log_prices.size()) - 1; }
  double delta() const { return horizon / n(); }
  double time(int i) const { return horizon * i / n(); }
  //! Delta_i X = X_{t_i} - X_{t_{i-1}}, i = 1..n.
  double increment(int i) const { return log_prices[i] - log_prices[i - 1]; }
};

enum class Side { left, right };
enum class SidedKind { two_sided, left_sided, right_sided };

//! Estimated spot variance over the observation grid plus provenance.
struct SpotVolSeries {
  std::vector<double> estimates;   // sigma^2-hat(t_i), i = 0..n
  double bandwidth = 0.0;
  std::string kernel_id;
  bool boundary_corrected = true;
  SidedKind sided = SidedKind::two_sided;
  double horizon = 0.0;
};

//! RV_n = sum (Delta_i X)^2, estimating the integrated variance.
double realized_variance(const PricePath& path);

//! (3 Delta)^{-1} sum (Delta_i X)^4, estimating the integrated quarticity.
double realized_quarticity(const PricePath& path);

//! Kernel spot-variance estimate at time tau: weights attach at the left
//! endpoints t_{i-1}. With boundary correction the weighted sum is divided by
//! Delta * sum_i K_h(t_{i-1} - tau); DegenerateWeights is thrown when that
//! normalizer underflows (compact kernels with h too small relative to Delta).
double spot_vol_at(const PricePath& path, const Kernel& kernel, double h,
                   double tau, bool boundary_corrected);

struct GridEvalStats {
  std::uint64_t kernel_evals = 0;
  std::uint64_t state_updates = 0;
  bool fast_path = false;
};

//! Estimates at every grid point t_0..t_n. Dispatches to the O(n) recurrence
//! for the exponential kernel and to the O(n) moving window for the uniform
//! kernel; direct summation otherwise.
SpotVolSeries spot_vol_grid(const PricePath& path, const Kernel& kernel,
                            double h, bool boundary_corrected,
                            GridEvalStats* stats = nullptr);

//! Partial sums of the grid-aligned exponential recurrence, in units of
//! 2h * K_h (so the estimate at bandwidth h is total() / (2h)).
struct ExpState {
  double sum_minus = 0.0; // increments strictly left of tau
  double sum_star = 0.0;  // the increment straddling tau
  double sum_plus = 0.0;  // increments strictly right
  double total() const { return sum_minus + sum_star + sum_plus; }
};

//! One step tau -> tau + Delta of the exponential-kernel recurrence.
ExpState exp_recurrence_step(const ExpState& state, double next_increment_sq,
                             double delta_over_h);

//! O(1) streaming update of the one-sided exponentially weighted estimate:
//! sigma^2_{t_i} = exp(-Delta/h) [sigma^2_{t_{i-1}} + (Delta_i X)^2 / (2h)].
double online_update(double prev_estimate, double new_increment_sq, double h,
                     double delta);

//! One-sided estimator at a grid time tau = t_i. Side `left` sums j > i and
//! side `right` sums j <= i, both normalized by their own weight sums (the
//! index conventions follow the defining formulas verbatim; the "left"
//! estimator uses the increments to the right of t_i). Throws EmptySide when
//! the requested side has no increments.
double one_sided(const PricePath& path, const Kernel& kernel, double h,
                 double tau, Side side);

//! One-sided estimates at every grid index (O(n) total for the exponential
//! kernel). Entries whose side is empty (i = n for left, i = 0 for right) are
//! NaN.
std::vector<double> one_sided_grid(const PricePath& path, const Kernel& kernel,
                                   double h, Side side);

} // namespace spotvol
