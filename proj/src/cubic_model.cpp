#include "fhn/cubic_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fhn {

namespace {

// Bisection-safeguarded Newton for f(x) = y on a bracket [lo, hi] where
// f - y changes sign. Newton from the midpoint; any iterate leaving the
// bracket or failing to shrink the residual falls back to bisection.
double refine_root(const CubicModel& m, double y, double lo, double hi,
                   double g_lo) {
  const double tol = 1e-13 * std::max(1.0, std::abs(y));
  double x = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double g = m.f(x) - y;
    if (std::abs(g) <= tol) return x;
    if ((g < 0.0) == (g_lo < 0.0)) {
      lo = x;
    } else {
      hi = x;
    }
    const double dg = m.f_prime(x);
    double next = x - g / dg;
    if (!(next > lo && next < hi)) {
      next = 0.5 * (lo + hi);
    }
    if (next == x) break;  // bracket exhausted at double precision
    x = next;
  }
  return x;
}

}  // namespace

CubicModel::CubicModel(double alpha, double beta)
    : alpha_(alpha), beta_(beta), sum_(alpha + beta), prod_(alpha * beta) {
  if (!(alpha < 0.0)) {
    throw std::domain_error("CubicModel: alpha must be negative, got " +
                            std::to_string(alpha));
  }
  if (!(beta > 0.0)) {
    throw std::domain_error("CubicModel: beta must be positive, got " +
                            std::to_string(beta));
  }
  // Critical points: roots of 3x^2 - 2(alpha+beta)x + alpha*beta = 0.
  const double disc = std::sqrt(sum_ * sum_ - 3.0 * prod_);
  a0_ = (sum_ - disc) / 3.0;
  a1_ = (sum_ + disc) / 3.0;
  f_a0_ = f(a0_);
  f_a1_ = f(a1_);
}

BranchTriple CubicModel::branch_roots(double y) const {
  if (!(y > f_a0_ && y < f_a1_)) {
    throw std::domain_error(
        "branch_roots: y must lie strictly inside (f(a0), f(a1)) = (" +
        std::to_string(f_a0_) + ", " + std::to_string(f_a1_) + "), got " +
        std::to_string(y));
  }
  const double w0 = a1_ - a0_;

  // Left bracket: f is decreasing on (-inf, a0) and unbounded above, so
  // expanding geometrically from a0 must cross y.
  double w = w0;
  while (f(a0_ - w) <= y) w *= 2.0;
  const double x_minus = refine_root(*this, y, a0_ - w, a0_, f(a0_ - w) - y);

  // Middle bracket (a0, a1): f increasing from f(a0) < y to f(a1) > y.
  const double x_zero = refine_root(*this, y, a0_, a1_, f_a0_ - y);

  // Right bracket: f decreasing on (a1, +inf) toward -inf.
  w = w0;
  while (f(a1_ + w) >= y) w *= 2.0;
  const double x_plus = refine_root(*this, y, a1_, a1_ + w, f_a1_ - y);

  return BranchTriple{y, x_minus, x_zero, x_plus};
}

EigenPair CubicModel::eigenvalues(double a, double delta) const {
  if (!(delta > 0.0)) {
    throw std::domain_error("eigenvalues: delta must be positive, got " +
                            std::to_string(delta));
  }
  const double fp = f_prime(a);
  const std::complex<double> root =
      std::sqrt(std::complex<double>(fp * fp - 4.0 * delta, 0.0));
  const double scale = 1.0 / (2.0 * delta);
  return EigenPair{scale * (fp + root), scale * (fp - root)};
}

}  // namespace fhn
