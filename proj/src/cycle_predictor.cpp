#include "fhn/cycle_predictor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fhn/errors.hpp"
#include "fhn/numerics.hpp"

namespace fhn {

namespace {

void require_a_inside(const NoiseLevelData& nl, double a, const char* where) {
  if (!(a > nl.x_minus && a < nl.x_plus)) {
    throw std::domain_error(
        std::string(where) + ": a must lie strictly inside (x_minus(c), x_plus(c)) = (" +
        std::to_string(nl.x_minus) + ", " + std::to_string(nl.x_plus) +
        "), got " + std::to_string(a));
  }
}

// Right-hand side of the branch ODEs: x_plus*(psi) - a (rising) or
// x_minus*(psi) - a (falling).
double branch_speed(const CubicModel& m, Branch b, double psi, double a) {
  const BranchTriple r = m.branch_roots(psi);
  return (b == Branch::right ? r.x_plus : r.x_minus) - a;
}

double rk4_step(const CubicModel& m, Branch b, double psi, double a,
                double h) {
  const double k1 = branch_speed(m, b, psi, a);
  const double k2 = branch_speed(m, b, psi + 0.5 * h * k1, a);
  const double k3 = branch_speed(m, b, psi + 0.5 * h * k2, a);
  const double k4 = branch_speed(m, b, psi + h * k3, a);
  return psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Integrates one phase from psi0 until psi crosses y_target, recording the
// state at every node into (ts, psis) with time offset t0. Returns the event
// time located by bisection on the step size (1e-10 absolute in time).
double integrate_phase(const CubicModel& m, Branch b, double a, double psi0,
                       double y_target, double h, double t0,
                       std::vector<double>& ts, std::vector<double>& psis) {
  const bool upward = (b == Branch::right);
  double psi = psi0;
  double t = t0;
  ts.push_back(t);
  psis.push_back(psi);
  const long max_steps = 1 << 22;
  for (long step = 0; step < max_steps; ++step) {
    double next;
    try {
      next = rk4_step(m, b, psi, a, h);
    } catch (const std::domain_error&) {
      throw NumericalError(
          "cycle_functions: state left the admissible band at t = " +
          std::to_string(t));
    }
    const bool crossed = upward ? (next >= y_target) : (next <= y_target);
    if (crossed) {
      // Event: find the substep h* with rk4_step(psi, h*) = y_target.
      double lo = 0.0, hi = h;
      while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        const double trial = rk4_step(m, b, psi, a, mid);
        const bool hit = upward ? (trial >= y_target) : (trial <= y_target);
        if (hit) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      const double h_event = 0.5 * (lo + hi);
      ts.push_back(t + h_event);
      psis.push_back(y_target);
      return t + h_event;
    }
    psi = next;
    t += h;
    ts.push_back(t);
    psis.push_back(psi);
  }
  throw NumericalError("cycle_functions: event not reached after " +
                       std::to_string(max_steps) + " steps");
}

std::size_t interval_index(const std::vector<double>& grid, double s) {
  auto it = std::upper_bound(grid.begin(), grid.end(), s);
  if (it == grid.begin()) return 0;
  std::size_t i = static_cast<std::size_t>(it - grid.begin()) - 1;
  return std::min(i, grid.size() - 2);
}

}  // namespace

std::pair<double, double> periods(const CubicModel& model,
                                  const NoiseLevelData& nl, double a) {
  require_a_inside(nl, a, "periods");
  const double t1 = adaptive_simpson(
      [&](double y) { return 1.0 / (model.branch_roots(y).x_plus - a); },
      nl.y_minus, nl.y_plus, 1e-9);
  const double t2 = adaptive_simpson(
      [&](double y) {
        return 1.0 / std::abs(model.branch_roots(y).x_minus - a);
      },
      nl.y_minus, nl.y_plus, 1e-9);
  return {t1, t2};
}

CycleSpec make_cycle_spec(const CubicModel& model, const NoiseLevelData& nl,
                          double a) {
  const auto [t1, t2] = periods(model, nl, a);
  return CycleSpec{model, nl, a, t1, t2};
}

CycleSamples cycle_functions(const CycleSpec& spec, std::size_t n_samples) {
  if (n_samples < 16) {
    throw std::domain_error("cycle_functions: n_samples must be >= 16, got " +
                            std::to_string(n_samples));
  }
  require_a_inside(spec.nl, spec.a, "cycle_functions");

  const CubicModel& m = spec.model;
  const double T = spec.period();
  const double h = T / 4096.0;

  CycleSamples out(m);
  out.y_minus = spec.nl.y_minus;
  out.y_plus = spec.nl.y_plus;
  out.T1 = spec.T1;
  out.T2 = spec.T2;

  const double t1_event =
      integrate_phase(m, Branch::right, spec.a, spec.nl.y_minus,
                      spec.nl.y_plus, h, 0.0, out.grid_t, out.grid_psi);
  // Drop the duplicated node at the switch so the grid stays strictly sorted.
  out.grid_t.pop_back();
  out.grid_psi.pop_back();
  const double t_total =
      integrate_phase(m, Branch::left, spec.a, spec.nl.y_plus,
                      spec.nl.y_minus, h, t1_event, out.grid_t, out.grid_psi);
  out.T1_event = t1_event;
  out.T2_event = t_total - t1_event;

  const double rel1 = std::abs(out.T1_event - spec.T1) / spec.T1;
  const double rel2 = std::abs(out.T2_event - spec.T2) / spec.T2;
  if (rel1 > 1e-6 || rel2 > 1e-6) {
    throw NumericalError(
        "cycle_functions: event times disagree with quadrature: T1 " +
        std::to_string(out.T1_event) + " vs " + std::to_string(spec.T1) +
        ", T2 " + std::to_string(out.T2_event) + " vs " +
        std::to_string(spec.T2));
  }

  out.t.resize(n_samples);
  out.psi.resize(n_samples);
  out.phi.resize(n_samples);
  out.branch.resize(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double ti = static_cast<double>(i) * T / static_cast<double>(n_samples);
    out.t[i] = ti;
    out.psi[i] = out.psi_at(ti);
    out.branch[i] = out.branch_at(ti);
    const BranchTriple r = m.branch_roots(out.psi[i]);
    out.phi[i] = (out.branch[i] == Branch::right) ? r.x_plus : r.x_minus;
  }
  return out;
}

double CycleSamples::psi_at(double time) const {
  const double T = period();
  double s = std::fmod(time, T);
  if (s < 0.0) s += T;
  const std::size_t i = interval_index(grid_t, s);
  const double t0 = grid_t[i], t1 = grid_t[i + 1];
  const double w = (s - t0) / (t1 - t0);
  return grid_psi[i] + w * (grid_psi[i + 1] - grid_psi[i]);
}

Branch CycleSamples::branch_at(double time) const {
  const double T = period();
  double s = std::fmod(time, T);
  if (s < 0.0) s += T;
  // Left-limit convention at the switching instants: t = 0 belongs to the
  // falling phase just ended, t = T1 to the rising one.
  if (s == 0.0) return Branch::left;
  return (s <= T1_event) ? Branch::right : Branch::left;
}

double CycleSamples::phi_at(double time) const {
  const BranchTriple r = model.branch_roots(psi_at(time));
  return (branch_at(time) == Branch::right) ? r.x_plus : r.x_minus;
}

AlignResult phase_align(std::span<const double> t, std::span<const double> y,
                        const CycleSamples& cycle) {
  if (t.size() != y.size() || t.size() < 2) {
    throw std::domain_error("phase_align: time and value series must have "
                            "equal length >= 2");
  }
  const double T = cycle.period();
  const double span = t.back() - t.front();
  if (!(span >= 2.0 * T * (1.0 - 1e-9))) {
    throw std::domain_error(
        "phase_align: window must cover at least two periods (" +
        std::to_string(2.0 * T) + "), got " + std::to_string(span));
  }

  const double t0 = t.front();
  const auto sup_dist = [&](double tau, std::size_t stride) {
    double d = 0.0;
    for (std::size_t i = 0; i < t.size(); i += stride) {
      d = std::max(d, std::abs(y[i] - cycle.psi_at(t[i] - t0 + tau)));
    }
    return d;
  };

  // Coarse scan on a thinned series, golden-section refinement around the
  // best cell, final value on the full series.
  const std::size_t thin = std::max<std::size_t>(1, t.size() / 2048);
  constexpr int kCoarse = 256;
  int best_j = 0;
  double best_d = sup_dist(0.0, thin);
  for (int j = 1; j < kCoarse; ++j) {
    const double d = sup_dist(static_cast<double>(j) * T / kCoarse, thin);
    if (d < best_d) {
      best_d = d;
      best_j = j;
    }
  }
  const double cell = T / kCoarse;
  const double center = static_cast<double>(best_j) * cell;
  double shift = golden_section_min(
      [&](double tau) { return sup_dist(tau, thin); }, center - cell,
      center + cell, 1e-9 * T);
  shift = std::fmod(shift, T);
  if (shift < 0.0) shift += T;
  return AlignResult{shift, sup_dist(shift, 1)};
}

}  // namespace fhn
