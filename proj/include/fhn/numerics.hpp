#pragma once

#include <cmath>
#include <functional>

namespace fhn {

/// Adaptive Simpson quadrature with absolute tolerance and a recursion-depth
/// cap. The error estimate is the usual Richardson difference /15.
double adaptive_simpson(const std::function<double(double)>& fn, double a,
                        double b, double abs_tol = 1e-10, int max_depth = 40);

/// Bisection on [lo, hi] for a function with g(lo), g(hi) of opposite sign.
/// Runs until the bracket width falls below width_tol or max_iter halvings.
double bisect(const std::function<double(double)>& g, double lo, double hi,
              double width_tol, int max_iter = 200);

/// Golden-section minimization of a unimodal function on [lo, hi].
double golden_section_min(const std::function<double(double)>& fn, double lo,
                          double hi, double x_tol);

}  // namespace fhn
