#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "fhn/cubic_model.hpp"
#include "fhn/quasipotential.hpp"

namespace fhn {

/// Stable branch carrying the fast variable during each half of the cycle:
/// the right branch x_plus*(y) while the slow variable rises, the left
/// branch x_minus*(y) while it falls.
enum class Branch { right, left };

/// Predicted cycle for level c and drive parameter a. T1 and T2 are the
/// rise/fall durations
///   T1 = int dy / (x_plus*(y) - a),  T2 = int dy / |x_minus*(y) - a|
/// over [y_minus(c), y_plus(c)]; both integrands are bounded because a lies
/// strictly between x_minus(c) and x_plus(c).
struct CycleSpec {
  CubicModel model;
  NoiseLevelData nl;
  double a;
  double T1;
  double T2;

  double period() const { return T1 + T2; }
};

/// Rise/fall durations by adaptive Simpson (absolute tolerance 1e-9).
/// Requires nl.x_minus < a < nl.x_plus; throws std::domain_error otherwise.
std::pair<double, double> periods(const CubicModel& model,
                                  const NoiseLevelData& nl, double a);

/// Convenience: computes periods() and bundles the inputs.
CycleSpec make_cycle_spec(const CubicModel& model, const NoiseLevelData& nl,
                          double a);

/// One period of the predicted cycle, sampled on a uniform grid.
/// psi is the slow component, integrated from psi(0) = y_minus(c); phi is
/// the fast component x_plus*(psi) / x_minus*(psi) per branch. phi jumps at
/// the switching instants {0, T1}; samples landing exactly there take the
/// left-limit (the phase just ended).
struct CycleSamples {
  explicit CycleSamples(const CubicModel& m) : model(m) {}

  CubicModel model;

  std::vector<double> t;
  std::vector<double> psi;
  std::vector<double> phi;
  std::vector<Branch> branch;

  double y_minus = 0.0;
  double y_plus = 0.0;
  double T1 = 0.0;        // quadrature values from the CycleSpec
  double T2 = 0.0;
  double T1_event = 0.0;  // event-detected switch times from the integration
  double T2_event = 0.0;

  // Dense integration grid backing psi_at(); finer than the sample grid.
  std::vector<double> grid_t;
  std::vector<double> grid_psi;

  double period() const { return T1_event + T2_event; }

  /// Periodic evaluation of psi by linear interpolation on the dense grid.
  double psi_at(double time) const;
  Branch branch_at(double time) const;
  double phi_at(double time) const;
};

/// Integrates the branch ODEs with classical RK4 (base step T/4096) and
/// locates the switching events psi = y_plus(c), psi = y_minus(c) by
/// bisection on the step size to 1e-10 in time. Throws NumericalError if the
/// event-detected durations disagree with the quadrature values by more than
/// 1e-6 relative, or if the state leaves the admissible band.
/// Requires n_samples >= 16.
CycleSamples cycle_functions(const CycleSpec& spec, std::size_t n_samples);

/// Circular shift tau (in [0, T)) minimizing the sup distance between a
/// recorded slow-variable series and psi(. + tau), plus the achieved value.
/// Trajectory times are taken relative to their first entry.
struct AlignResult {
  double shift;
  double sup_dist;
};

/// Coarse 256-point scan over one period followed by golden-section
/// refinement; the series must span at least two periods (throws
/// std::domain_error otherwise).
AlignResult phase_align(std::span<const double> t, std::span<const double> y,
                        const CycleSamples& cycle);

}  // namespace fhn
