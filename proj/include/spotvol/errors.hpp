#pragma once

#include <stdexcept>
#include <string>

namespace spotvol {

//! Adaptive quadrature could not reach the requested tolerance within budget.
struct QuadratureFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

//! A linear system required by a kernel constructor is numerically singular.
struct SingularSystem : std::runtime_error {
  using std::runtime_error::runtime_error;
};

//! Step-kernel coefficient vector sums to (numerically) zero.
struct ZeroMass : std::runtime_error {
  using std::runtime_error::runtime_error;
};

//! Boundary normalizer underflowed; 0/0 would result.
struct DegenerateWeights : std::runtime_error {
  using std::runtime_error::runtime_error;
};

//! One-sided estimator requested on a side with no increments.
struct EmptySide : std::runtime_error {
  using std::runtime_error::runtime_error;
};

//! TSRVV scale parameters violate 2b + k < n or k >= 2.
struct InvalidScales : std::runtime_error {
  using std::runtime_error::runtime_error;
};

//! TSRVV is zero even after the first-term fallback; caller should keep h_init.
struct VolVolDegenerate : std::runtime_error {
  using std::runtime_error::runtime_error;
};

//! Optimal-bandwidth denominator is not positive (kernel fails Assumption on C_gamma).
struct NonpositiveDenominator : std::runtime_error {
  using std::runtime_error::runtime_error;
};

//! Circulant-embedding eigenvalues fell below the clamping threshold.
struct EmbeddingNotPSD : std::runtime_error {
  using std::runtime_error::runtime_error;
};

//! Bad CLI flags / configuration file contents (exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

//! Malformed input data, e.g. a bad CSV row (exit code 3).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

} // namespace spotvol
