#pragma once

#include "spotvol/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace spotvol::quad {

namespace detail {

// Gauss-Kronrod 15(7) nodes and weights (positive half, QUADPACK dqk15).
inline constexpr double gk_nodes[8] = {
  0.991455371120813, 0.949107912342759, 0.864864423359769,
  0.741531185599394, 0.586087235467691, 0.405845151377397,
  0.207784955007898, 0.000000000000000
};
inline constexpr double gk_weights[8] = {
  0.022935322010529, 0.063092092629979, 0.104790010322250,
  0.140653259715525, 0.169004726639267, 0.190350578064785,
  0.204432940075298, 0.209482141084728
};
inline constexpr double g7_weights[4] = {
  0.129484966168870, 0.279705391489277, 0.381830050505119,
  0.417959183673469
};

struct PanelResult {
  double value;
  double error;
};

template <typename F>
PanelResult gk15(const F& f, double a, double b)
{
  const double c = 0.5 * (a + b);
  const double r = 0.5 * (b - a);
  const double fc = f(c);
  double kron = gk_weights[7] * fc;
  double gauss = g7_weights[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double x = r * gk_nodes[i];
    const double fs = f(c - x) + f(c + x);
    kron += gk_weights[i] * fs;
    if (i % 2 == 1)
      gauss += g7_weights[i / 2] * fs;
  }
  kron *= r;
  gauss *= r;
  return { kron, std::abs(kron - gauss) };
}

template <typename F>
double adaptive(const F& f, double a, double b, double abs_tol, int depth,
                std::size_t& evals, std::size_t budget)
{
  evals += 15;
  if (evals > budget)
    throw QuadratureFailed("quadrature evaluation budget exceeded");
  const PanelResult p = gk15(f, a, b);
  if (p.error <= abs_tol || depth >= 52)
    return p.value;
  const double c = 0.5 * (a + b);
  return adaptive(f, a, c, 0.5 * abs_tol, depth + 1, evals, budget) +
         adaptive(f, c, b, 0.5 * abs_tol, depth + 1, evals, budget);
}

} // namespace detail

//! Adaptive 1-d quadrature of f over [a, b] to absolute tolerance abs_tol.
//! Optional interior split points pin known kinks of the integrand.
//! Throws QuadratureFailed when the evaluation budget is exhausted.
template <typename F>
double integrate(const F& f, double a, double b, double abs_tol = 1e-12,
                 std::vector<double> splits = {},
                 std::size_t budget = std::size_t(1) << 26)
{
  if (!(a < b))
    return 0.0;
  splits.push_back(a);
  splits.push_back(b);
  std::sort(splits.begin(), splits.end());
  splits.erase(std::unique(splits.begin(), splits.end()), splits.end());
  std::size_t evals = 0;
  double total = 0.0;
  std::size_t pieces = 0;
  for (std::size_t i = 0; i + 1 < splits.size(); ++i)
    if (splits[i] >= a && splits[i + 1] <= b && splits[i] < splits[i + 1])
      ++pieces;
  if (pieces == 0)
    return 0.0;
  const double piece_tol = abs_tol / static_cast<double>(pieces);
  for (std::size_t i = 0; i + 1 < splits.size(); ++i) {
    const double lo = splits[i];
    const double hi = splits[i + 1];
    if (lo < a || hi > b || !(lo < hi))
      continue;
    total += detail::adaptive(f, lo, hi, piece_tol, 0, evals, budget);
  }
  return total;
}

//! Iterated 2-d quadrature of f over [ax,bx] x [ay,by] to absolute tolerance.
//! x_splits(y) may supply y-dependent kink locations of x -> f(x, y).
template <typename F>
double integrate_2d(const F& f, double ax, double bx, double ay, double by,
                    double abs_tol = 1e-10,
                    const std::function<std::vector<double>(double)>& x_splits = {},
                    std::vector<double> y_splits = {})
{
  if (!(ax < bx) || !(ay < by))
    return 0.0;
  const double inner_tol = abs_tol / (8.0 * (by - ay));
  auto outer = [&](double y) {
    std::vector<double> sx;
    if (x_splits)
      sx = x_splits(y);
    return integrate([&](double x) { return f(x, y); }, ax, bx, inner_tol, std::move(sx));
  };
  return integrate(outer, ay, by, abs_tol / 4.0, std::move(y_splits));
}

} // namespace spotvol::quad
