#include "spotvol/simulate.hpp"

#include "spotvol/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <stdexcept>

namespace spotvol {

namespace {

// SplitMix64 over (seed, index) to decorrelate stream seeds.
std::uint64_t mix64(std::uint64_t z)
{
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::mutex fftw_plan_mutex; // FFTW planning is not thread-safe

} // namespace

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t index)
{
  const std::uint64_t s0 = mix64(master_seed);
  const std::uint64_t s1 = mix64(s0 ^ mix64(index + 0x6a09e667f3bcc909ULL));
  std::seed_seq seq{ static_cast<std::uint32_t>(s0), static_cast<std::uint32_t>(s0 >> 32),
                     static_cast<std::uint32_t>(s1), static_cast<std::uint32_t>(s1 >> 32) };
  gen_.seed(seq);
}

void HestonConfig::validate() const
{
  if (!(2.0 * kappa * theta > xi * xi))
    throw std::invalid_argument("HestonConfig: Feller condition 2*kappa*theta > xi^2 violated");
  if (!(v0 > 0.0) || !(horizon > 0.0) || n < 2 || substeps < 1)
    throw std::invalid_argument("HestonConfig: invalid v0/horizon/n/substeps");
  if (rho < -1.0 || rho > 1.0)
    throw std::invalid_argument("HestonConfig: rho must lie in [-1, 1]");
}

SimulatedPath simulate_heston(const HestonConfig& cfg, RngStream& rng)
{
  cfg.validate();
  const int fine = cfg.n * cfg.substeps;
  const double df = cfg.horizon / fine;
  const double sdf = std::sqrt(df);
  const double rc = std::sqrt(std::max(0.0, 1.0 - cfg.rho * cfg.rho));

  SimulatedPath out;
  out.path.horizon = cfg.horizon;
  out.path.log_prices.resize(cfg.n + 1);
  out.true_var.resize(cfg.n + 1);

  double v = cfg.v0;
  double x = cfg.x0;
  out.path.log_prices[0] = x;
  out.true_var[0] = std::max(v, 0.0);

  long double iv = 0.0L, iq = 0.0L;
  double vp_prev = std::max(v, 0.0);
  for (int k = 0; k < fine; ++k) {
    const double vp = std::max(v, 0.0);
    const double zw = rng.normal();
    const double zb = rng.normal();
    const double dw = sdf * zw;
    const double db = sdf * (cfg.rho * zw + rc * zb);
    const double sv = std::sqrt(vp);
    x += cfg.mu(vp) * df + sv * db;
    v += cfg.kappa * (cfg.theta - vp) * df + cfg.xi * sv * dw;

    const double vp_new = std::max(v, 0.0);
    iv += 0.5L * (static_cast<long double>(vp_prev) + vp_new) * df;
    iq += 0.5L * (static_cast<long double>(vp_prev) * vp_prev +
                  static_cast<long double>(vp_new) * vp_new) * df;
    vp_prev = vp_new;

    if ((k + 1) % cfg.substeps == 0) {
      const int i = (k + 1) / cfg.substeps;
      out.path.log_prices[i] = x;
      out.true_var[i] = vp_new;
    }
  }
  out.true_iv = static_cast<double>(iv);
  out.true_iq = static_cast<double>(iq);
  return out;
}

double fgn_autocovariance(double hurst, int k)
{
  const double g = 2.0 * hurst;
  const double a = std::abs(static_cast<double>(k));
  return 0.5 * (std::pow(a + 1.0, g) - 2.0 * std::pow(a, g) +
                std::pow(std::abs(a - 1.0), g));
}

std::vector<double> simulate_fbm(double hurst, int n, double T, RngStream& rng,
                                 bool* clamped)
{
  if (!(hurst > 0.0 && hurst < 1.0))
    throw std::invalid_argument("simulate_fbm: H must lie in (0, 1)");
  if (n < 2 || !(T > 0.0))
    throw std::invalid_argument("simulate_fbm: need n >= 2 and T > 0");
  if (clamped)
    *clamped = false;

  int npad = 1;
  while (npad < n)
    npad <<= 1;
  const int m = 2 * npad;

  // Circulant first row of the embedded covariance.
  std::vector<std::complex<double>> c(m);
  for (int j = 0; j <= npad; ++j)
    c[j] = fgn_autocovariance(hurst, j);
  for (int j = npad + 1; j < m; ++j)
    c[j] = c[m - j];

  std::vector<std::complex<double>> eig(m);
  {
    std::lock_guard<std::mutex> lk(fftw_plan_mutex);
    fftw_plan plan = fftw_plan_dft_1d(
      m, reinterpret_cast<fftw_complex*>(c.data()),
      reinterpret_cast<fftw_complex*>(eig.data()), FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
  }

  bool any_clamped = false;
  std::vector<double> lambda(m);
  for (int j = 0; j < m; ++j) {
    double v = eig[j].real();
    if (v < -1e-10)
      throw EmbeddingNotPSD("simulate_fbm: circulant eigenvalue below -1e-10");
    if (v < 0.0) {
      v = 0.0;
      any_clamped = true;
    }
    lambda[j] = v;
  }
  if (clamped)
    *clamped = any_clamped;

  // Hermitian-symmetric Gaussian spectrum -> real stationary samples.
  std::vector<std::complex<double>> spec(m);
  spec[0] = std::sqrt(lambda[0] / m) * rng.normal();
  spec[npad] = std::sqrt(lambda[npad] / m) * rng.normal();
  for (int j = 1; j < npad; ++j) {
    const double a = rng.normal();
    const double b = rng.normal();
    const double s = std::sqrt(lambda[j] / (2.0 * m));
    spec[j] = std::complex<double>(s * a, s * b);
    spec[m - j] = std::conj(spec[j]);
  }

  std::vector<std::complex<double>> sample(m);
  {
    std::lock_guard<std::mutex> lk(fftw_plan_mutex);
    fftw_plan plan = fftw_plan_dft_1d(
      m, reinterpret_cast<fftw_complex*>(spec.data()),
      reinterpret_cast<fftw_complex*>(sample.data()), FFTW_FORWARD,
      FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
  }

  const double scale = std::pow(T / n, hurst); // delta^H per-step scaling
  std::vector<double> inc(n);
  for (int j = 0; j < n; ++j)
    inc[j] = scale * sample[j].real();
  return inc;
}

std::vector<double> simulate_fou(double lambda, double sigma, double hurst,
                                 int n, double T, RngStream& rng, int substeps,
                                 double y0)
{
  if (!(lambda > 0.0) || sigma < 0.0 || substeps < 1)
    throw std::invalid_argument("simulate_fou: bad parameters");
  if (!(hurst > 0.5 && hurst < 1.0))
    throw std::invalid_argument("simulate_fou: H must lie in (1/2, 1)");
  const int fine = n * substeps;
  const double df = T / fine;
  const int burn = static_cast<int>(std::ceil(10.0 / (lambda * df)));
  const int total = burn + fine;

  std::vector<double> db;
  if (sigma > 0.0)
    db = simulate_fbm(hurst, total, total * df, rng);

  std::vector<double> out(n + 1);
  double y = y0;
  for (int k = 0; k < burn; ++k)
    y = y * (1.0 - lambda * df) + (sigma > 0.0 ? sigma * db[k] : 0.0);
  out[0] = y;
  for (int k = 0; k < fine; ++k) {
    y = y * (1.0 - lambda * df) + (sigma > 0.0 ? sigma * db[burn + k] : 0.0);
    if ((k + 1) % substeps == 0)
      out[(k + 1) / substeps] = y;
  }
  return out;
}

SimulatedPath synthesize_price(const std::vector<double>& var_fine, MuSpec mu,
                               int n, double T, RngStream& rng)
{
  if (n < 2 || !(T > 0.0))
    throw std::invalid_argument("synthesize_price: need n >= 2 and T > 0");
  if (var_fine.size() < static_cast<std::size_t>(n) ||
      (var_fine.size() - 1) % static_cast<std::size_t>(n) != 0)
    throw std::invalid_argument(
      "synthesize_price: var path length must be n*substeps + 1");
  const int substeps = static_cast<int>((var_fine.size() - 1) / n);
  const int fine = n * substeps;
  const double df = T / fine;
  const double sdf = std::sqrt(df);

  SimulatedPath out;
  out.path.horizon = T;
  out.path.log_prices.resize(n + 1);
  out.true_var.resize(n + 1);
  out.path.log_prices[0] = 0.0;
  out.true_var[0] = std::max(var_fine[0], 0.0);

  double x = 0.0;
  long double iv = 0.0L, iq = 0.0L;
  for (int k = 0; k < fine; ++k) {
    const double v = std::max(var_fine[k], 0.0);
    const double v1 = std::max(var_fine[k + 1], 0.0);
    x += mu(v) * df + std::sqrt(v) * sdf * rng.normal();
    iv += 0.5L * (static_cast<long double>(v) + v1) * df;
    iq += 0.5L * (static_cast<long double>(v) * v +
                  static_cast<long double>(v1) * v1) * df;
    if ((k + 1) % substeps == 0) {
      const int i = (k + 1) / substeps;
      out.path.log_prices[i] = x;
      out.true_var[i] = v1;
    }
  }
  out.true_iv = static_cast<double>(iv);
  out.true_iq = static_cast<double>(iq);
  return out;
}

double cir_mean(double t, double kappa, double theta, double v0)
{
  return theta + (v0 - theta) * std::exp(-kappa * t);
}

double cir_variance(double t, double kappa, double theta, double xi, double v0)
{
  const double e = std::exp(-kappa * t);
  return v0 * xi * xi / kappa * e * (1.0 - e) +
         theta * xi * xi / (2.0 * kappa) * (1.0 - e) * (1.0 - e);
}

} // namespace spotvol
