#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fhn/cubic_model.hpp"
#include "fhn/cycle_predictor.hpp"
#include "fhn/quasipotential.hpp"
#include "oracles.hpp"

using fhn::Branch;
using fhn::CubicModel;
using fhn::CycleSamples;
using fhn::CycleSpec;

namespace {

const CubicModel& model22() {
  static const CubicModel m(-2.0, 2.0);
  return m;
}

const fhn::NoiseLevelData& nl_c2() {
  static const fhn::NoiseLevelData nl = fhn::level_crossings(model22(), 2.0);
  return nl;
}

}  // namespace

TEST_CASE("symmetric periods coincide") {
  const auto [t1, t2] = fhn::periods(model22(), nl_c2(), 0.0);
  CHECK(std::abs(t1 - t2) <= 1e-9);
  // High-precision reference 1.86249972771298652.
  CHECK(t1 == doctest::Approx(1.86249972771298652).epsilon(1e-7));
}

TEST_CASE("rise duration against the change-of-variables oracle") {
  // Substituting y = f(x) on the right branch turns the rise integral into
  // int (3x^2 - 4)/x dx with antiderivative (3/2)x^2 - 4 log x, evaluated
  // between the branch points above y_minus and y_plus.
  const CubicModel& m = model22();
  const fhn::NoiseLevelData& nl = nl_c2();
  const auto x_plus_of = [&](double y) {
    return oracle::bisect_root([&](double x) { return m.f(x) - y; }, m.a1(),
                               3.0);
  };
  const auto anti = [](double x) {
    return 1.5 * x * x - 4.0 * std::log(x);
  };
  const double substitution =
      anti(x_plus_of(nl.y_minus)) - anti(x_plus_of(nl.y_plus));
  const auto [t1, t2] = fhn::periods(m, nl, 0.0);
  (void)t2;
  CHECK(std::abs(t1 - substitution) <= 1e-7);
}

TEST_CASE("periods collapse as c -> S") {
  const CubicModel& m = model22();
  const fhn::SeparatrixData sep = fhn::separatrix_point(m);
  const fhn::NoiseLevelData nl = fhn::level_crossings(m, sep.S - 1e-4);
  const auto [t1, t2] = fhn::periods(m, nl, 0.0);
  CHECK(t1 < 0.05);
  CHECK(t2 < 0.05);
}

TEST_CASE("periods reject a outside the bifurcation interval") {
  CHECK_THROWS_AS(fhn::periods(model22(), nl_c2(), -2.5), std::domain_error);
  CHECK_THROWS_AS(fhn::periods(model22(), nl_c2(), nl_c2().x_plus),
                  std::domain_error);
}

TEST_CASE("cycle integration hits the switching levels") {
  const CycleSpec spec = fhn::make_cycle_spec(model22(), nl_c2(), -1.3);
  const CycleSamples cyc = fhn::cycle_functions(spec, 512);

  CHECK(cyc.psi[0] == doctest::Approx(nl_c2().y_minus).epsilon(1e-12));
  CHECK(cyc.psi_at(cyc.T1_event) ==
        doctest::Approx(nl_c2().y_plus).epsilon(1e-8));
  CHECK(cyc.psi_at(cyc.period()) ==
        doctest::Approx(nl_c2().y_minus).epsilon(1e-8));

  // Event times agree with the quadrature durations.
  CHECK(std::abs(cyc.T1_event - spec.T1) / spec.T1 <= 1e-6);
  CHECK(std::abs(cyc.T2_event - spec.T2) / spec.T2 <= 1e-6);

  // psi stays inside [y_minus, y_plus] and is monotone per phase.
  for (std::size_t i = 0; i < cyc.psi.size(); ++i) {
    CHECK(cyc.psi[i] >= nl_c2().y_minus - 1e-9);
    CHECK(cyc.psi[i] <= nl_c2().y_plus + 1e-9);
    if (i > 1 && cyc.branch[i] == Branch::right &&
        cyc.branch[i - 1] == Branch::right) {
      CHECK(cyc.psi[i] > cyc.psi[i - 1]);
    }
    if (i > 0 && cyc.branch[i] == Branch::left &&
        cyc.branch[i - 1] == Branch::left && cyc.t[i - 1] > cyc.T1_event) {
      CHECK(cyc.psi[i] < cyc.psi[i - 1]);
    }
  }
}

TEST_CASE("fast component equals the branch values") {
  const CycleSpec spec = fhn::make_cycle_spec(model22(), nl_c2(), -1.3);
  const CycleSamples cyc = fhn::cycle_functions(spec, 512);
  double max_phi_rising = -1e300;
  for (std::size_t i = 0; i < cyc.phi.size(); ++i) {
    const fhn::BranchTriple r = model22().branch_roots(cyc.psi[i]);
    if (cyc.branch[i] == Branch::right) {
      CHECK(cyc.phi[i] == doctest::Approx(r.x_plus).epsilon(1e-10));
      max_phi_rising = std::max(max_phi_rising, cyc.phi[i]);
    } else {
      CHECK(cyc.phi[i] == doctest::Approx(r.x_minus).epsilon(1e-10));
    }
  }
  // The rising-phase supremum of phi is x_plus*(y_minus(c)), approached at
  // the start of the phase; at the end of the phase phi reaches x_plus(c).
  const double x_plus_at_ymin = model22().branch_roots(nl_c2().y_minus).x_plus;
  CHECK(cyc.phi_at(1e-9) == doctest::Approx(x_plus_at_ymin).epsilon(1e-6));
  CHECK(max_phi_rising <= x_plus_at_ymin + 1e-9);
  CHECK(max_phi_rising > x_plus_at_ymin - 0.01);  // sample-grid resolution
  CHECK(cyc.phi_at(cyc.T1_event - 1e-9) ==
        doctest::Approx(nl_c2().x_plus).epsilon(1e-6));
}

TEST_CASE("finite differences of psi match the branch drift") {
  const CycleSpec spec = fhn::make_cycle_spec(model22(), nl_c2(), -1.3);
  const CycleSamples cyc = fhn::cycle_functions(spec, 4096);
  const double T = spec.period();
  const double dt = T / 4096.0;
  int checked = 0;
  for (std::size_t i = 1; i + 1 < cyc.t.size(); ++i) {
    // Skip the switching neighborhoods where psi is not differentiable.
    const double t = cyc.t[i];
    if (std::min(std::abs(t - cyc.T1_event),
                 std::min(t, std::abs(T - t))) < 3.0 * dt) {
      continue;
    }
    if (cyc.branch[i] != cyc.branch[i - 1] ||
        cyc.branch[i + 1] != cyc.branch[i]) {
      continue;
    }
    const double fd =
        (cyc.psi[i + 1] - cyc.psi[i - 1]) / (cyc.t[i + 1] - cyc.t[i - 1]);
    const fhn::BranchTriple r = model22().branch_roots(cyc.psi[i]);
    const double drift =
        (cyc.branch[i] == Branch::right ? r.x_plus : r.x_minus) - spec.a;
    CHECK(std::abs(fd - drift) <= 1e-4);
    ++checked;
  }
  CHECK(checked > 3000);
}

TEST_CASE("periodicity of the interpolant") {
  const CycleSpec spec = fhn::make_cycle_spec(model22(), nl_c2(), 0.0);
  const CycleSamples cyc = fhn::cycle_functions(spec, 256);
  const double T = cyc.period();
  for (double t : {0.3, 1.1, 2.9}) {
    CHECK(cyc.psi_at(t + T) == doctest::Approx(cyc.psi_at(t)).epsilon(1e-12));
    CHECK(cyc.psi_at(t - T) == doctest::Approx(cyc.psi_at(t)).epsilon(1e-12));
  }
}

TEST_CASE("cycle_functions rejects tiny sample counts") {
  const CycleSpec spec = fhn::make_cycle_spec(model22(), nl_c2(), 0.0);
  CHECK_THROWS_AS(fhn::cycle_functions(spec, 8), std::domain_error);
}

TEST_CASE("phase alignment of the cycle with itself") {
  const CycleSpec spec = fhn::make_cycle_spec(model22(), nl_c2(), -1.3);
  const CycleSamples cyc = fhn::cycle_functions(spec, 2048);
  const double T = cyc.period();

  std::vector<double> t, y;
  for (double s = 0.0; s <= 2.5 * T; s += T / 700.0) {
    t.push_back(s);
    y.push_back(cyc.psi_at(s));
  }
  const fhn::AlignResult self = fhn::phase_align(t, y, cyc);
  CHECK(std::min(self.shift, T - self.shift) <= 1e-6);
  CHECK(self.sup_dist <= 1e-9);

  // A series shifted by T/3 aligns at shift T/3.
  std::vector<double> y_shift;
  y_shift.reserve(t.size());
  for (double s : t) y_shift.push_back(cyc.psi_at(s + T / 3.0));
  const fhn::AlignResult shifted = fhn::phase_align(t, y_shift, cyc);
  CHECK(std::abs(shifted.shift - T / 3.0) <= 1e-3);
  CHECK(shifted.sup_dist <= 1e-6);
}

TEST_CASE("phase alignment needs two periods of data") {
  const CycleSpec spec = fhn::make_cycle_spec(model22(), nl_c2(), 0.0);
  const CycleSamples cyc = fhn::cycle_functions(spec, 256);
  std::vector<double> t, y;
  for (double s = 0.0; s < 1.5 * cyc.period(); s += 0.01) {
    t.push_back(s);
    y.push_back(cyc.psi_at(s));
  }
  CHECK_THROWS_AS(fhn::phase_align(t, y, cyc), std::domain_error);
}

TEST_CASE("degenerate limit: the cycle range collapses onto the separatrix") {
  const CubicModel& m = model22();
  const fhn::SeparatrixData sep = fhn::separatrix_point(m);
  const fhn::NoiseLevelData nl = fhn::level_crossings(m, sep.S - 1e-5);
  CHECK(std::abs(nl.y_minus - sep.y_star) < 1e-2);
  CHECK(std::abs(nl.y_plus - sep.y_star) < 1e-2);
  const CycleSpec spec = fhn::make_cycle_spec(m, nl, 0.0);
  CHECK(spec.period() < 0.05);
}
