#pragma once

#include "spotvol/estimator.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace spotvol {

//! Deterministic per-path random stream derived from (master seed, index).
//! Replications with distinct indices are independent; identical (seed,
//! index) reproduces the same draws within one build on one platform.
class RngStream {
public:
  explicit RngStream(std::uint64_t master_seed, std::uint64_t index = 0);

  double normal() { return normal_(gen_); }
  double uniform01() { return uniform_(gen_); }
  std::mt19937_64& engine() { return gen_; }

private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> normal_{ 0.0, 1.0 };
  std::uniform_real_distribution<double> uniform_{ 0.0, 1.0 };
};

//! Affine drift mu_t = alpha + beta * V_t.
struct MuSpec {
  double alpha = 0.05;
  double beta = -0.5;
  double operator()(double v) const { return alpha + beta * v; }
};

struct HestonConfig {
  double kappa = 5.0;
  double theta = 0.04;
  double xi = 0.5;
  double rho = 0.0;   // simulator-only robustness setting
  MuSpec mu{};
  double x0 = 1.0;    // initial log price
  double v0 = 0.04;   // initial variance
  int n = 0;          // observed increments
  double horizon = 0.0;
  int substeps = 10;  // fine-grid refinement per observation step
  void validate() const; // Feller 2*kappa*theta > xi^2, v0 > 0, T > 0
};

//! Ground-truth carrier: observed path plus the variance skeleton and the
//! fine-grid integrated variance / quarticity.
struct SimulatedPath {
  PricePath path;
  std::vector<double> true_var; // V(t_i) on the observation grid
  double true_iv = 0.0;         // int_0^T V dt   (fine-grid trapezoid)
  double true_iq = 0.0;         // int_0^T V^2 dt (fine-grid trapezoid)
  bool embedding_clamped = false;
};

//! Full-truncation Euler simulation of the Heston model on a fine grid of
//! n * substeps steps, decimated to the observation grid.
SimulatedPath simulate_heston(const HestonConfig& cfg, RngStream& rng);

//! Exact-covariance fractional Gaussian noise (increments of fBM over steps
//! of length T/n) via circulant embedding; n is padded to a power of two
//! internally. Eigenvalues in [-1e-10, 0) are clamped to zero and reported
//! through `clamped`; values below -1e-10 throw EmbeddingNotPSD.
std::vector<double> simulate_fbm(double hurst, int n, double T, RngStream& rng,
                                 bool* clamped = nullptr);

//! Stationary-ish fractional Ornstein-Uhlenbeck path Y(t_i) on the
//! observation grid: Euler over a fine grid with a discarded burn-in of
//! length >= 10 / lambda. Use exp(Y) as a variance driver.
std::vector<double> simulate_fou(double lambda, double sigma, double hurst,
                                 int n, double T, RngStream& rng,
                                 int substeps = 1, double y0 = 0.0);

//! Builds a log-price path from a given fine-grid variance path (length
//! n * substeps + 1) with an independent driving Brownian motion.
SimulatedPath synthesize_price(const std::vector<double>& var_fine, MuSpec mu,
                               int n, double T, RngStream& rng);

//! CIR closed-form moments, used as simulator oracles and for oracle
//! bandwidths: E[V_t] and Var(V_t) given V_0 = v0.
double cir_mean(double t, double kappa, double theta, double v0);
double cir_variance(double t, double kappa, double theta, double xi, double v0);

//! Closed-form fGn autocovariance at integer lag k for unit-step increments.
double fgn_autocovariance(double hurst, int k);

} // namespace spotvol
