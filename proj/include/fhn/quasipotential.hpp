#pragma once

#include "fhn/cubic_model.hpp"

namespace fhn {

/// Double-well potential for the frozen-y drift -y + f(x):
///   U(x) = 2 (y x - F(x)),  F the antiderivative of f with F(0) = 0,
/// so U'(x) = 2 (y - f(x)). For y strictly between the critical values of f,
/// U has minima at the outer roots of f(x) = y and a maximum at the middle
/// one; the well depths U(x_zero) - U(x_minus/x_plus) are the transition
/// rates V_minus / V_plus.
class Potential {
 public:
  Potential(const CubicModel& model, double y) : model_(model), y_(y) {}

  double operator()(double x) const {
    return 2.0 * (y_ * x - model_.antiderivative(x));
  }

  double y() const { return y_; }
  const CubicModel& model() const { return model_; }

 private:
  CubicModel model_;
  double y_;
};

/// Unique intersection (y_star, S) of the graphs of V_minus (strictly
/// increasing) and V_plus (strictly decreasing) on (f(a0), f(a1)).
struct SeparatrixData {
  double y_star;
  double S;
};

/// For a noise-versus-timescale level c in (0, S): the crossings
/// V_minus(y_minus) = c = V_plus(y_plus) with y_minus < y_star < y_plus,
/// and the induced bifurcation points x_minus = x_minus*(y_minus),
/// x_plus = x_plus*(y_plus) on the outer branches.
struct NoiseLevelData {
  double c;
  double y_minus;
  double y_plus;
  double x_minus;
  double x_plus;
};

/// Left well depth V_minus(y) = U(x_zero*(y)) - U(x_minus*(y)). Strictly
/// positive and strictly increasing on (f(a0), f(a1)); tends to 0 at f(a0).
/// Throws std::domain_error outside the open interval.
double v_minus(const CubicModel& model, double y);

/// Right well depth V_plus(y) = U(x_zero*(y)) - U(x_plus*(y)); decreasing.
double v_plus(const CubicModel& model, double y);

/// Finds (y_star, S) by bisection on V_minus - V_plus, which is strictly
/// increasing and changes sign across the interval.
SeparatrixData separatrix_point(const CubicModel& model);

/// Solves V_minus(y) = c on (f(a0), y_star] and V_plus(y) = c on
/// [y_star, f(a1)) by bisection. Requires 0 < c < S.
NoiseLevelData level_crossings(const CubicModel& model, double c);

}  // namespace fhn
