#pragma once

#include "spotvol/estimator.hpp"

namespace spotvol {

class Kernel;

struct VolVolEstimate {
  double ivv = 0.0;          // estimated int g^2 dt
  int k = 0;                 // coarse scale in grid steps
  int b = 0;                 // boundary trim in grid steps
  bool used_fallback = false;
};

enum class TsrvvMode {
  standard,        // bias-corrected two-scale form with the (n-k+1)/(nk) factor
  plain_correction  // internal: plain 1/k fine-scale correction (oracle tests)
};

//! Two-time-scale realized volatility-of-volatility from one-sided spot
//! estimates at bandwidth h:
//!   IVV = (1/k) sum_{i=b}^{n-k-b} (D^{(k)}_i)^2
//!       - ((n-k+1)/(nk)) sum_{i=b+k-1}^{n-k-b} (D^{(1)}_i)^2,
//! where D^{(k)}_i pairs the backward-looking estimate at t_i with the
//! forward-looking estimate at t_{i+k} (windows face away from the gap, so
//! the smoothing offset cancels between the two scales). When the corrected
//! value is <= 0, returns the first term alone with used_fallback set.
//! Throws InvalidScales unless k >= 2, b >= 1 and 2b + k < n.
VolVolEstimate tsrvv(const PricePath& path, const Kernel& kernel, double h,
                     int k, int b, TsrvvMode mode = TsrvvMode::standard);

enum class KScaleMode { simple, rate_optimal };

//! Default coarse scale: max(2, round(c n^{2/3})) or max(2, round(c n^{3/4})).
int default_k(int n, KScaleMode mode = KScaleMode::simple, double c = 1.0);

//! Default boundary trim max(1, round(0.05 n)).
int default_b(int n);

//! Heston vol-of-vol parameter: xi-hat = sqrt(IVV / IV); 0 when ivv = 0.
double heston_xi(double ivv, double iv_hat);

} // namespace spotvol
