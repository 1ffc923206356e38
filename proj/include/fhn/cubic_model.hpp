#pragma once

#include <complex>

namespace fhn {

/// The three solutions of f(x) = y for y strictly between the critical
/// values of f. Ordered x_minus < x_zero < x_plus; x_minus and x_plus lie
/// on the outer (stable) branches, x_zero on the middle (unstable) one.
struct BranchTriple {
  double y;
  double x_minus;
  double x_zero;
  double x_plus;
};

/// Eigenvalues of the linearization of the slow-fast system at an
/// equilibrium (a, f(a)). Complex conjugates whenever 4*delta > f'(a)^2.
struct EigenPair {
  std::complex<double> lambda_plus;
  std::complex<double> lambda_minus;
};

/// Cubic nonlinearity f(x) = -x (x - alpha)(x - beta) with alpha < 0 < beta,
/// together with its branch geometry: the critical points a0 < a1 of f and
/// the critical values f(a0) < f(a1) are cached at construction.
class CubicModel {
 public:
  /// Requires alpha < 0 < beta; throws std::domain_error otherwise.
  CubicModel(double alpha, double beta);

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  double a0() const { return a0_; }
  double a1() const { return a1_; }
  double f_a0() const { return f_a0_; }
  double f_a1() const { return f_a1_; }

  /// f(x) = -x^3 + (alpha+beta) x^2 - alpha*beta x, evaluated in Horner form.
  double f(double x) const {
    return ((-x + sum_) * x - prod_) * x;
  }

  /// f'(x) = -3x^2 + 2(alpha+beta) x - alpha*beta.
  double f_prime(double x) const {
    return (-3.0 * x + 2.0 * sum_) * x - prod_;
  }

  /// Antiderivative F of f with F(0) = 0.
  double antiderivative(double x) const {
    return (((-x / 4.0 + sum_ / 3.0) * x - prod_ / 2.0) * x) * x;
  }

  /// Solves f(x) = y on all three monotone intervals. Each root is bracketed
  /// (outer brackets found by geometric expansion, f is unbounded) and
  /// refined by bisection-safeguarded Newton until
  /// |f(x) - y| <= 1e-10 * max(1, |y|).
  /// Requires f(a0) < y < f(a1) strictly; throws std::domain_error otherwise
  /// (fewer than three real roots, including the fold values themselves).
  BranchTriple branch_roots(double y) const;

  /// Eigenvalues (f'(a) +- sqrt(f'(a)^2 - 4 delta)) / (2 delta) of the
  /// linearization at (a, f(a)); the square root is taken in C, so the pair
  /// is an attracting/repulsive focus when the discriminant is negative.
  /// Requires delta > 0.
  EigenPair eigenvalues(double a, double delta) const;

 private:
  double alpha_;
  double beta_;
  double sum_;   // alpha + beta
  double prod_;  // alpha * beta
  double a0_;
  double a1_;
  double f_a0_;
  double f_a1_;
};

}  // namespace fhn
