#include "fhn/sde_engine.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "fhn/errors.hpp"
#include "fhn/rng.hpp"

namespace fhn {

namespace {

std::size_t step_count(double horizon, double dt) {
  // Tolerate horizon = n*dt up to rounding.
  return static_cast<std::size_t>(std::floor(horizon / dt + 1e-9));
}

[[noreturn]] void non_finite(const char* where, std::size_t step) {
  throw NumericalError(std::string(where) +
                       ": state became non-finite at step " +
                       std::to_string(step) + " (dt too large?)");
}

}  // namespace

void SimParams::validate() const {
  if (!(delta > 0.0))
    throw std::domain_error("SimParams: delta must be positive");
  if (!(epsilon >= 0.0))
    throw std::domain_error("SimParams: epsilon must be nonnegative");
  if (!(dt > 0.0)) throw std::domain_error("SimParams: dt must be positive");
  if (!(dt <= delta / 20.0))
    throw std::domain_error("SimParams: dt must satisfy dt <= delta/20 to "
                            "resolve the fast variable");
  if (!(horizon >= dt))
    throw std::domain_error("SimParams: horizon must be at least dt");
  if (record_stride < 1)
    throw std::domain_error("SimParams: record_stride must be >= 1");
}

Trajectory simulate_full(const CubicModel& model, const SimParams& params,
                         double x0, double y0) {
  params.validate();
  const std::size_t n_steps = step_count(params.horizon, params.dt);
  const double dt = params.dt;
  const double drift_scale = dt / params.delta;
  const double noise_scale =
      std::sqrt(params.epsilon) / params.delta * std::sqrt(dt);

  Rng rng(params.seed);
  Trajectory traj;
  traj.params = params;
  const std::size_t n_rec = n_steps / params.record_stride + 1;
  traj.t.reserve(n_rec);
  traj.x.reserve(n_rec);
  traj.y.reserve(n_rec);

  double x = x0, y = y0;
  traj.t.push_back(0.0);
  traj.x.push_back(x);
  traj.y.push_back(y);
  for (std::size_t step = 1; step <= n_steps; ++step) {
    const double x_new =
        x + (-y + model.f(x)) * drift_scale + noise_scale * rng.gauss();
    y += (x - params.a) * dt;
    x = x_new;
    if (!std::isfinite(x) || !std::isfinite(y)) {
      non_finite("simulate_full", step);
    }
    if (step % params.record_stride == 0) {
      traj.t.push_back(static_cast<double>(step) * dt);
      traj.x.push_back(x);
      traj.y.push_back(y);
    }
  }
  return traj;
}

Trajectory simulate_frozen(const CubicModel& model, double y, double delta,
                           double epsilon, double dt, double horizon,
                           std::uint64_t seed, double x0,
                           std::size_t record_stride) {
  SimParams params{0.0, delta, epsilon, dt, horizon, seed, record_stride};
  params.validate();
  const std::size_t n_steps = step_count(horizon, dt);
  const double drift_scale = dt / delta;
  const double noise_scale = std::sqrt(epsilon) / delta * std::sqrt(dt);

  Rng rng(seed);
  Trajectory traj;
  traj.params = params;
  double z = x0;
  traj.t.push_back(0.0);
  traj.x.push_back(z);
  traj.y.push_back(y);
  for (std::size_t step = 1; step <= n_steps; ++step) {
    z += (-y + model.f(z)) * drift_scale + noise_scale * rng.gauss();
    if (!std::isfinite(z)) non_finite("simulate_frozen", step);
    if (step % record_stride == 0) {
      traj.t.push_back(static_cast<double>(step) * dt);
      traj.x.push_back(z);
      traj.y.push_back(y);
    }
  }
  return traj;
}

Trajectory simulate_frozen_rescaled(const CubicModel& model, double y,
                                    double eps_tilde, double dt,
                                    double horizon, std::uint64_t seed,
                                    double x0, std::size_t record_stride) {
  if (!(dt > 0.0))
    throw std::domain_error("simulate_frozen_rescaled: dt must be positive");
  if (!(eps_tilde >= 0.0))
    throw std::domain_error(
        "simulate_frozen_rescaled: eps_tilde must be nonnegative");
  if (!(horizon >= dt))
    throw std::domain_error(
        "simulate_frozen_rescaled: horizon must be at least dt");
  if (record_stride < 1)
    throw std::domain_error(
        "simulate_frozen_rescaled: record_stride must be >= 1");

  const std::size_t n_steps = step_count(horizon, dt);
  const double noise_scale = std::sqrt(eps_tilde) * std::sqrt(dt);

  Rng rng(seed);
  Trajectory traj;
  traj.params =
      SimParams{0.0, 1.0, eps_tilde, dt, horizon, seed, record_stride};
  double z = x0;
  traj.t.push_back(0.0);
  traj.x.push_back(z);
  traj.y.push_back(y);
  for (std::size_t step = 1; step <= n_steps; ++step) {
    z += (-y + model.f(z)) * dt + noise_scale * rng.gauss();
    if (!std::isfinite(z)) non_finite("simulate_frozen_rescaled", step);
    if (step % record_stride == 0) {
      traj.t.push_back(static_cast<double>(step) * dt);
      traj.x.push_back(z);
      traj.y.push_back(y);
    }
  }
  return traj;
}

ExitSample first_exit(const CubicModel& model, double y, double eps_tilde,
                      BasinId basin, double dt, double horizon,
                      std::uint64_t seed) {
  if (!(eps_tilde > 0.0))
    throw std::domain_error("first_exit: eps_tilde must be positive");
  if (!(dt > 0.0)) throw std::domain_error("first_exit: dt must be positive");
  if (!(horizon >= dt))
    throw std::domain_error("first_exit: horizon must be at least dt");

  const BranchTriple roots = model.branch_roots(y);
  const double threshold = roots.x_zero;
  const bool from_left = (basin == BasinId::d1);
  double z = from_left ? roots.x_minus : roots.x_plus;

  const std::size_t n_steps = step_count(horizon, dt);
  const double noise_scale = std::sqrt(eps_tilde) * std::sqrt(dt);
  Rng rng(seed);
  for (std::size_t step = 1; step <= n_steps; ++step) {
    const double z_new =
        z + (-y + model.f(z)) * dt + noise_scale * rng.gauss();
    if (!std::isfinite(z_new)) non_finite("first_exit", step);
    const bool crossed =
        from_left ? (z_new >= threshold) : (z_new <= threshold);
    if (crossed) {
      const double frac = (threshold - z) / (z_new - z);
      const double tau = (static_cast<double>(step) - 1.0 + frac) * dt;
      return ExitSample{tau,
                        from_left ? ExitSide::right_exit : ExitSide::left_exit,
                        y, basin};
    }
    z = z_new;
  }
  return ExitSample{horizon, ExitSide::censored, y, basin};
}

std::uint64_t derive_replica_seed(std::uint64_t master,
                                  std::uint64_t replica_index) {
  return splitmix64(master + 0x9E3779B97F4A7C15ULL * (replica_index + 1));
}

}  // namespace fhn
