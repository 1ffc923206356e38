#include "fhn/quasipotential.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "fhn/numerics.hpp"

namespace fhn {

namespace {

void require_interior(const CubicModel& m, double y, const char* where) {
  if (!(y > m.f_a0() && y < m.f_a1())) {
    throw std::domain_error(std::string(where) +
                            ": y must lie strictly inside (f(a0), f(a1)), got " +
                            std::to_string(y));
  }
}

}  // namespace

double v_minus(const CubicModel& model, double y) {
  require_interior(model, y, "v_minus");
  const BranchTriple r = model.branch_roots(y);
  const Potential u(model, y);
  return u(r.x_zero) - u(r.x_minus);
}

double v_plus(const CubicModel& model, double y) {
  require_interior(model, y, "v_plus");
  const BranchTriple r = model.branch_roots(y);
  const Potential u(model, y);
  return u(r.x_zero) - u(r.x_plus);
}

SeparatrixData separatrix_point(const CubicModel& model) {
  const double span = model.f_a1() - model.f_a0();
  const double eta = 1e-9 * span;
  const double lo = model.f_a0() + eta;
  const double hi = model.f_a1() - eta;
  // V_minus - V_plus is strictly increasing: negative near f(a0) (the left
  // well vanishes), positive near f(a1).
  const double y_star = bisect(
      [&](double y) { return v_minus(model, y) - v_plus(model, y); }, lo, hi,
      1e-16 * span, 128);
  return SeparatrixData{y_star, v_minus(model, y_star)};
}

NoiseLevelData level_crossings(const CubicModel& model, double c) {
  const SeparatrixData sep = separatrix_point(model);
  if (!(c > 0.0 && c < sep.S)) {
    throw std::domain_error("level_crossings: c must lie in (0, S) = (0, " +
                            std::to_string(sep.S) + "), got " +
                            std::to_string(c));
  }
  const double span = model.f_a1() - model.f_a0();
  const double eta = 1e-12 * span;
  const double width_tol = 1e-13 * span;
  const double y_minus =
      bisect([&](double y) { return v_minus(model, y) - c; },
             model.f_a0() + eta, sep.y_star, width_tol, 200);
  const double y_plus =
      bisect([&](double y) { return v_plus(model, y) - c; }, sep.y_star,
             model.f_a1() - eta, width_tol, 200);
  const double x_minus = model.branch_roots(y_minus).x_minus;
  const double x_plus = model.branch_roots(y_plus).x_plus;
  return NoiseLevelData{c, y_minus, y_plus, x_minus, x_plus};
}

}  // namespace fhn
