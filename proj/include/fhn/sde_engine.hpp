#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fhn/cubic_model.hpp"

namespace fhn {

/// Parameters of one Euler-Maruyama run of the coupled system
///   delta dX = (-Y + f(X)) dt + sqrt(epsilon) dW,   dY = (X - a) dt.
/// dt must resolve the fast variable: dt <= delta / 20.
struct SimParams {
  double a = 0.0;
  double delta = 0.01;
  double epsilon = 0.0;
  double dt = 1e-4;
  double horizon = 1.0;
  std::uint64_t seed = 1;
  std::size_t record_stride = 1;

  /// Throws std::domain_error naming the violated constraint.
  void validate() const;
};

/// Recorded path. t is strictly increasing; one row every record_stride
/// steps, starting with the initial state.
struct Trajectory {
  std::vector<double> t;
  std::vector<double> x;
  std::vector<double> y;
  SimParams params;
};

/// Basins of attraction of the frozen-y drift: D1 = (-inf, x_zero*(y))
/// attracted to x_minus*(y), D2 = (x_zero*(y), +inf) to x_plus*(y).
enum class BasinId { d1, d2 };

enum class ExitSide { left_exit, right_exit, censored };

/// First-exit observation for the rescaled frozen diffusion. censored means
/// the horizon elapsed without a crossing (then tau == horizon).
struct ExitSample {
  double tau;
  ExitSide side;
  double y;
  BasinId basin;
};

/// Euler-Maruyama for the full system from (x0, y0). Bit-reproducible for a
/// fixed (seed, params) on a given build. Throws NumericalError with the
/// step index if the state becomes non-finite (dt too large).
Trajectory simulate_full(const CubicModel& model, const SimParams& params,
                         double x0, double y0);

/// Same scheme with the slow variable frozen at y:
///   delta dZ = (-y + f(Z)) dt + sqrt(epsilon) dW.
Trajectory simulate_frozen(const CubicModel& model, double y, double delta,
                           double epsilon, double dt, double horizon,
                           std::uint64_t seed, double x0,
                           std::size_t record_stride = 1);

/// Time-changed frozen diffusion (s = t / delta):
///   dZ = (-y + f(Z)) ds + sqrt(eps_tilde) dW.
/// Fed the same normal draws with step dt/delta and eps_tilde = eps/delta,
/// its per-step recursion coincides with simulate_frozen's.
Trajectory simulate_frozen_rescaled(const CubicModel& model, double y,
                                    double eps_tilde, double dt,
                                    double horizon, std::uint64_t seed,
                                    double x0, std::size_t record_stride = 1);

/// Runs the rescaled frozen diffusion from the bottom of the requested basin
/// (x_minus*(y) for D1, x_plus*(y) for D2) until the state crosses
/// x_zero*(y) or the horizon elapses. The crossing time is linearly
/// interpolated within the step. Requires eps_tilde > 0.
ExitSample first_exit(const CubicModel& model, double y, double eps_tilde,
                      BasinId basin, double dt, double horizon,
                      std::uint64_t seed);

/// Deterministic per-replica seed: splitmix64(master + GOLDEN * (index+1)),
/// GOLDEN = 0x9E3779B97F4A7C15. Injective in the index for a fixed master,
/// so derived seeds never collide.
std::uint64_t derive_replica_seed(std::uint64_t master,
                                  std::uint64_t replica_index);

}  // namespace fhn
