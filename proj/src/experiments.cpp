#include "fhn/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "fhn/errors.hpp"
#include "fhn/report_io.hpp"
#include "fhn/rng.hpp"

namespace fhn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Agreement tolerances for the "sustained oscillation" classification:
// range endpoints relative to |y_minus(c)|, |y_plus(c)|; period relative to
// the quadrature period.
constexpr double kEndpointRtol = 0.15;
constexpr double kPeriodRtol = 0.20;

struct WindowIdx {
  std::size_t lo;
  std::size_t hi;  // inclusive
};

WindowIdx window_indices(const std::vector<double>& t, double t_lo,
                         double t_hi) {
  const auto lo_it = std::lower_bound(t.begin(), t.end(), t_lo);
  auto hi_it = std::upper_bound(t.begin(), t.end(), t_hi);
  if (lo_it >= t.end() || hi_it == t.begin()) {
    throw std::domain_error("observation window lies outside the recorded "
                            "trajectory");
  }
  std::size_t lo = static_cast<std::size_t>(lo_it - t.begin());
  std::size_t hi = static_cast<std::size_t>(hi_it - t.begin()) - 1;
  if (hi <= lo + 1) {
    throw std::domain_error("observation window contains too few samples");
  }
  return {lo, hi};
}

struct CrossingStats {
  int count = 0;
  double first_t = 0.0;
  double last_t = 0.0;

  double period() const {
    return count >= 2 ? (last_t - first_t) / (count - 1) : kNaN;
  }
};

// Upcrossings of a level, with the crossing instants linearly interpolated.
CrossingStats upcrossings(const std::vector<double>& t,
                          const std::vector<double>& y, WindowIdx w,
                          double level) {
  CrossingStats s;
  for (std::size_t i = w.lo + 1; i <= w.hi; ++i) {
    if (y[i - 1] < level && y[i] >= level) {
      const double frac = (level - y[i - 1]) / (y[i] - y[i - 1]);
      const double tc = t[i - 1] + frac * (t[i] - t[i - 1]);
      if (s.count == 0) s.first_t = tc;
      s.last_t = tc;
      ++s.count;
    }
  }
  return s;
}

std::pair<double, double> min_max(const std::vector<double>& v, WindowIdx w) {
  double lo = v[w.lo], hi = v[w.lo];
  for (std::size_t i = w.lo + 1; i <= w.hi; ++i) {
    lo = std::min(lo, v[i]);
    hi = std::max(hi, v[i]);
  }
  return {lo, hi};
}

double resolve_dt(const ScenarioConfig& cfg) {
  const double dt = cfg.dt > 0.0 ? cfg.dt : cfg.delta / 50.0;
  if (!(dt <= cfg.delta / 20.0)) {
    throw std::domain_error("scenario dt must satisfy dt <= delta/20");
  }
  return dt;
}

std::size_t resolve_stride(const ScenarioConfig& cfg, double horizon,
                           double dt) {
  if (cfg.record_stride > 0) return cfg.record_stride;
  const auto steps = static_cast<std::size_t>(horizon / dt);
  return std::max<std::size_t>(1, steps / 40000);
}

void check_delta(const ScenarioConfig& cfg) {
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) {
    throw std::domain_error("scenario delta must lie in (0, 1)");
  }
  if (cfg.replicas < 1) {
    throw std::domain_error("scenario replicas must be >= 1");
  }
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  return std::accumulate(v.begin(), v.end(), 0.0) /
         static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) return kNaN;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    std::nth_element(v.begin(), v.begin() + mid - 1, v.end());
    m = 0.5 * (m + v[mid - 1]);
  }
  return m;
}

// Slow relaxation rate at the equilibrium (a, f(a)): the linearization
// eigenvalue of smaller modulus real part, floored away from zero.
double slow_rate(const CubicModel& m, double a, double delta) {
  const EigenPair ev = m.eigenvalues(a, delta);
  const double r1 = std::abs(ev.lambda_plus.real());
  const double r2 = std::abs(ev.lambda_minus.real());
  return std::max(std::min(r1, r2), 1e-3);
}

// Settle surrogate for the equilibrium regimes: deterministic transit time
// from the worst initial corner to the h/2 ball around (a, f(a)), plus two
// slow relaxation times. Capped by probe_horizon.
double settle_from_deterministic_probe(const CubicModel& m,
                                       const ScenarioConfig& cfg, double dt,
                                       double y0_lo, double y0_hi,
                                       double x0_lo, double x0_hi,
                                       double probe_horizon) {
  const double f_a = m.f(cfg.a);
  const double ball = 0.5 * cfg.h;
  double worst = 0.0;
  const double corners[2][2] = {{x0_lo, y0_lo}, {x0_hi, y0_hi}};
  for (const auto& corner : corners) {
    SimParams p{cfg.a, cfg.delta, 0.0, dt, probe_horizon, 0,
                std::max<std::size_t>(1, static_cast<std::size_t>(
                                             probe_horizon / dt / 20000))};
    double entered = probe_horizon;
    try {
      const Trajectory traj = simulate_full(m, p, corner[0], corner[1]);
      for (std::size_t i = traj.t.size(); i-- > 0;) {
        const double dist =
            std::abs(traj.x[i] - cfg.a) + std::abs(traj.y[i] - f_a);
        if (dist > ball) {
          entered = (i + 1 < traj.t.size()) ? traj.t[i + 1] : probe_horizon;
          break;
        }
        entered = traj.t[i];
      }
    } catch (const NumericalError&) {
      entered = probe_horizon;
    }
    worst = std::max(worst, entered);
  }
  return std::min(probe_horizon,
                  worst + 2.0 / slow_rate(m, cfg.a, cfg.delta));
}

double trapezoid_l2(const std::vector<double>& t, const std::vector<double>& x,
                    WindowIdx w, const CycleSamples& cycle, double shift) {
  const double t0 = t[w.lo];
  double acc = 0.0;
  double prev_sq = 0.0;
  {
    const double d = x[w.lo] - cycle.phi_at(shift);
    prev_sq = d * d;
  }
  for (std::size_t i = w.lo + 1; i <= w.hi; ++i) {
    const double d = x[i] - cycle.phi_at(t[i] - t0 + shift);
    const double sq = d * d;
    acc += 0.5 * (prev_sq + sq) * (t[i] - t[i - 1]);
    prev_sq = sq;
  }
  return acc;
}

void aggregate_common(VerificationReport& rep) {
  rep.failed_replicas = 0;
  for (const auto& r : rep.replicas) {
    if (r.failed) ++rep.failed_replicas;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// ScenarioConfig
// ---------------------------------------------------------------------------

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::cycle: return "cycle";
    case Regime::equilibrium: return "equilibrium";
    case Regime::degenerate: return "degenerate";
    case Regime::equilibrium_high: return "equilibrium_high";
  }
  return "cycle";
}

Regime regime_from_string(const std::string& name) {
  if (name == "cycle") return Regime::cycle;
  if (name == "equilibrium") return Regime::equilibrium;
  if (name == "degenerate") return Regime::degenerate;
  if (name == "equilibrium_high") return Regime::equilibrium_high;
  throw std::domain_error("unknown regime: " + name);
}

double ScenarioConfig::epsilon() const {
  return c * delta / std::abs(std::log(delta));
}

nlohmann::json ScenarioConfig::to_json() const {
  return nlohmann::json{
      {"model", {{"alpha", alpha}, {"beta", beta}}},
      {"regime", to_string(regime)},
      {"c", c},
      {"a", a},
      {"delta", delta},
      {"replicas", replicas},
      {"h", h},
      {"A", window},
      {"y0_range", {y0_min, y0_max}},
      {"settle_time", settle_time},
      {"dt", dt},
      {"record_stride", record_stride},
      {"seed", seed},
      {"threads", threads},
  };
}

ScenarioConfig ScenarioConfig::from_json(const nlohmann::json& j_in) {
  const nlohmann::json& j = j_in.contains("config") ? j_in.at("config") : j_in;
  ScenarioConfig cfg;
  if (j.contains("model")) {
    cfg.alpha = j.at("model").value("alpha", cfg.alpha);
    cfg.beta = j.at("model").value("beta", cfg.beta);
  }
  if (j.contains("regime")) {
    cfg.regime = regime_from_string(j.at("regime").get<std::string>());
  }
  cfg.c = j.value("c", cfg.c);
  cfg.a = j.value("a", cfg.a);
  cfg.delta = j.value("delta", cfg.delta);
  cfg.replicas = j.value("replicas", cfg.replicas);
  cfg.h = j.value("h", cfg.h);
  cfg.window = j.value("A", cfg.window);
  if (j.contains("y0_range")) {
    cfg.y0_min = j.at("y0_range").at(0).get<double>();
    cfg.y0_max = j.at("y0_range").at(1).get<double>();
  }
  cfg.settle_time = j.value("settle_time", cfg.settle_time);
  cfg.dt = j.value("dt", cfg.dt);
  cfg.record_stride = j.value("record_stride", cfg.record_stride);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.threads = j.value("threads", cfg.threads);
  return cfg;
}

WilsonInterval wilson_interval(int successes, int n) {
  WilsonInterval w;
  w.successes = successes;
  w.n = n;
  if (n <= 0) return w;
  constexpr double z = 1.959963984540054;
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2n = z * z / nn;
  const double denom = 1.0 + z2n;
  const double center = (p + 0.5 * z2n) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / nn + 0.25 * z2n / nn) / denom;
  w.p_hat = p;
  w.lo = std::min(std::max(0.0, center - half), p);
  w.hi = std::max(std::min(1.0, center + half), p);
  return w;
}

// ---------------------------------------------------------------------------
// Parallel replica loop
// ---------------------------------------------------------------------------

int hardware_threads_or(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(int n, int threads, const std::function<void(int)>& body) {
  const int workers = std::min(hardware_threads_or(threads), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// verify_limit_cycle
// ---------------------------------------------------------------------------

VerificationReport verify_limit_cycle(const ScenarioConfig& cfg) {
  if (cfg.regime != Regime::cycle) {
    throw std::domain_error("verify_limit_cycle requires regime 'cycle'");
  }
  check_delta(cfg);
  const CubicModel m(cfg.alpha, cfg.beta);
  const SeparatrixData sep = separatrix_point(m);
  if (!(cfg.c > 0.0 && cfg.c < sep.S)) {
    throw std::domain_error("cycle regime requires c in (0, S)");
  }
  const NoiseLevelData nl = level_crossings(m, cfg.c);
  if (!(cfg.a > nl.x_minus && cfg.a < nl.x_plus)) {
    throw std::domain_error(
        "cycle regime requires a in (x_minus(c), x_plus(c))");
  }
  const CycleSpec spec = make_cycle_spec(m, nl, cfg.a);
  const CycleSamples cycle = cycle_functions(spec, 4096);
  const double T = spec.period();

  const double settle = cfg.settle_time > 0.0 ? cfg.settle_time : T;
  const double window = cfg.window > 0.0 ? cfg.window : 3.0 * T;
  if (!(window >= 2.0 * T)) {
    throw std::domain_error(
        "cycle window must cover at least two predicted periods");
  }
  const double dt = resolve_dt(cfg);
  const double horizon = 2.0 * settle + window;
  const std::size_t stride = resolve_stride(cfg, horizon, dt);
  const double eps = cfg.epsilon();

  double y0_lo = cfg.y0_min, y0_hi = cfg.y0_max;
  if (!(y0_hi > y0_lo)) {
    const double margin = 0.01 * (nl.y_plus - nl.y_minus);
    y0_lo = nl.y_minus + margin;
    y0_hi = nl.y_plus - margin;
  }
  if (!(y0_lo > m.f_a0() && y0_hi < m.f_a1())) {
    throw std::domain_error("y0 range must lie inside (f(a0), f(a1))");
  }

  VerificationReport rep;
  rep.config = cfg;
  rep.epsilon = eps;
  rep.y_star = sep.y_star;
  rep.S = sep.S;
  rep.T1 = spec.T1;
  rep.T2 = spec.T2;
  rep.y_minus = nl.y_minus;
  rep.y_plus = nl.y_plus;
  rep.x_minus_c = nl.x_minus;
  rep.x_plus_c = nl.x_plus;
  rep.f_a = m.f(cfg.a);
  rep.settle_used = settle;
  rep.window_used = window;
  rep.dt_used = dt;
  rep.stride_used = stride;
  rep.replicas.resize(static_cast<std::size_t>(cfg.replicas));

  const double midline = 0.5 * (nl.y_minus + nl.y_plus);
  parallel_for(cfg.replicas, cfg.threads, [&](int r) {
    ReplicaMetrics mm;
    Rng init(derive_replica_seed(cfg.seed, 2 * static_cast<std::uint64_t>(r)));
    mm.y0 = y0_lo + (y0_hi - y0_lo) * init.uniform01();
    mm.x0 = m.branch_roots(mm.y0).x_plus;
    mm.sim_seed =
        derive_replica_seed(cfg.seed, 2 * static_cast<std::uint64_t>(r) + 1);
    mm.sup_eq_dist = kNaN;
    mm.sup_eq_dist_late = kNaN;
    mm.mean_y = kNaN;
    mm.sup_y_ystar = kNaN;
    mm.sup_y_ystar_late = kNaN;
    try {
      const SimParams p{cfg.a, cfg.delta, eps, dt, horizon, mm.sim_seed,
                        stride};
      const Trajectory traj = simulate_full(m, p, mm.x0, mm.y0);
      const WindowIdx w = window_indices(traj.t, settle, settle + window);
      std::tie(mm.y_min, mm.y_max) = min_max(traj.y, w);
      const CrossingStats cs = upcrossings(traj.t, traj.y, w, midline);
      mm.upcrossings = cs.count;
      mm.period = cs.period();
      const bool endpoints_ok =
          std::abs(mm.y_max - nl.y_plus) <= kEndpointRtol * std::abs(nl.y_plus) &&
          std::abs(mm.y_min - nl.y_minus) <=
              kEndpointRtol * std::abs(nl.y_minus);
      const bool period_ok =
          cs.count >= 3 && std::abs(mm.period - T) <= kPeriodRtol * T;
      mm.oscillating = endpoints_ok && period_ok;

      const std::span<const double> ts(traj.t.data() + w.lo, w.hi - w.lo + 1);
      const std::span<const double> ys(traj.y.data() + w.lo, w.hi - w.lo + 1);
      const AlignResult al = phase_align(ts, ys, cycle);
      mm.align_shift = al.shift;
      mm.sup_y_psi = al.sup_dist;
      mm.l2_x_phi = trapezoid_l2(traj.t, traj.x, w, cycle, al.shift);

      const WindowIdx w2 =
          window_indices(traj.t, 2.0 * settle, 2.0 * settle + window);
      const std::span<const double> ts2(traj.t.data() + w2.lo,
                                        w2.hi - w2.lo + 1);
      const std::span<const double> ys2(traj.y.data() + w2.lo,
                                        w2.hi - w2.lo + 1);
      mm.sup_y_psi_late = phase_align(ts2, ys2, cycle).sup_dist;
    } catch (const NumericalError&) {
      mm.failed = true;
    }
    rep.replicas[static_cast<std::size_t>(r)] = mm;
  });

  aggregate_common(rep);
  int n_ok = 0, osc = 0, sup_gt = 0, l2_gt = 0;
  std::vector<double> ymins, ymaxs, periods_v;
  for (const auto& r : rep.replicas) {
    if (r.failed) continue;
    ++n_ok;
    if (r.oscillating) ++osc;
    if (r.sup_y_psi > cfg.h) ++sup_gt;
    if (r.l2_x_phi > cfg.h) ++l2_gt;
    ymins.push_back(r.y_min);
    ymaxs.push_back(r.y_max);
    if (r.upcrossings >= 2) periods_v.push_back(r.period);
  }
  rep.p_oscillating = wilson_interval(osc, n_ok);
  rep.p_sup_y_psi_gt_h = wilson_interval(sup_gt, n_ok);
  rep.p_l2_x_phi_gt_h = wilson_interval(l2_gt, n_ok);
  rep.mean_y_min = mean_of(ymins);
  rep.mean_y_max = mean_of(ymaxs);
  rep.mean_period = mean_of(periods_v);
  rep.mean_y_after_settle = kNaN;
  return rep;
}

// ---------------------------------------------------------------------------
// verify_equilibrium
// ---------------------------------------------------------------------------

VerificationReport verify_equilibrium(const ScenarioConfig& cfg) {
  if (cfg.regime != Regime::equilibrium &&
      cfg.regime != Regime::equilibrium_high) {
    throw std::domain_error(
        "verify_equilibrium requires regime 'equilibrium' or "
        "'equilibrium_high'");
  }
  check_delta(cfg);
  const CubicModel m(cfg.alpha, cfg.beta);
  const SeparatrixData sep = separatrix_point(m);

  VerificationReport rep;
  rep.config = cfg;
  rep.y_star = sep.y_star;
  rep.S = sep.S;
  rep.T1 = kNaN;
  rep.T2 = kNaN;

  if (cfg.regime == Regime::equilibrium) {
    if (!(cfg.c > 0.0 && cfg.c < sep.S)) {
      throw std::domain_error("equilibrium regime requires c in (0, S)");
    }
    const NoiseLevelData nl = level_crossings(m, cfg.c);
    if (!(cfg.a < nl.x_minus || cfg.a > nl.x_plus)) {
      throw std::domain_error(
          "equilibrium regime requires a outside [x_minus(c), x_plus(c)]");
    }
    rep.y_minus = nl.y_minus;
    rep.y_plus = nl.y_plus;
    rep.x_minus_c = nl.x_minus;
    rep.x_plus_c = nl.x_plus;
  } else {
    if (!(cfg.c > sep.S)) {
      throw std::domain_error("equilibrium_high regime requires c > S");
    }
    const BranchTriple star = m.branch_roots(sep.y_star);
    if (!(cfg.a < star.x_minus || cfg.a > star.x_plus)) {
      throw std::domain_error(
          "equilibrium_high regime requires a outside "
          "[x_minus*(y*), x_plus*(y*)]");
    }
    rep.y_minus = kNaN;
    rep.y_plus = kNaN;
    rep.x_minus_c = star.x_minus;
    rep.x_plus_c = star.x_plus;
  }

  const double f_a = m.f(cfg.a);
  const double dt = resolve_dt(cfg);
  const double eps = cfg.epsilon();
  const double band = m.f_a1() - m.f_a0();

  double y0_lo = cfg.y0_min, y0_hi = cfg.y0_max;
  if (!(y0_hi > y0_lo)) {
    y0_lo = m.f_a0() + 0.05 * band;
    y0_hi = m.f_a1() - 0.05 * band;
  }
  if (!(y0_lo > m.f_a0() && y0_hi < m.f_a1())) {
    throw std::domain_error("y0 range must lie inside (f(a0), f(a1))");
  }

  // Initial fast variable on the stable branch on the equilibrium's side.
  const bool left_side = cfg.a < m.a0();
  const auto x0_of = [&](double y0) {
    const BranchTriple roots = m.branch_roots(y0);
    return left_side ? roots.x_minus : roots.x_plus;
  };

  double settle = cfg.settle_time;
  if (!(settle > 0.0)) {
    const double probe = std::max(100.0, 8.0 / slow_rate(m, cfg.a, cfg.delta));
    settle = settle_from_deterministic_probe(m, cfg, dt, y0_lo, y0_hi,
                                             x0_of(y0_lo), x0_of(y0_hi),
                                             probe);
  }
  const double window = cfg.window > 0.0 ? cfg.window : std::max(5.0, settle);
  const double horizon = 2.0 * settle + window;
  const std::size_t stride = resolve_stride(cfg, horizon, dt);

  rep.f_a = f_a;
  rep.epsilon = eps;
  rep.settle_used = settle;
  rep.window_used = window;
  rep.dt_used = dt;
  rep.stride_used = stride;
  rep.replicas.resize(static_cast<std::size_t>(cfg.replicas));

  parallel_for(cfg.replicas, cfg.threads, [&](int r) {
    ReplicaMetrics mm;
    Rng init(derive_replica_seed(cfg.seed, 2 * static_cast<std::uint64_t>(r)));
    mm.y0 = y0_lo + (y0_hi - y0_lo) * init.uniform01();
    mm.x0 = x0_of(mm.y0);
    mm.sim_seed =
        derive_replica_seed(cfg.seed, 2 * static_cast<std::uint64_t>(r) + 1);
    mm.period = kNaN;
    mm.align_shift = kNaN;
    mm.sup_y_psi = kNaN;
    mm.l2_x_phi = kNaN;
    mm.sup_y_psi_late = kNaN;
    mm.sup_y_ystar = kNaN;
    mm.sup_y_ystar_late = kNaN;
    try {
      const SimParams p{cfg.a, cfg.delta, eps, dt, horizon, mm.sim_seed,
                        stride};
      const Trajectory traj = simulate_full(m, p, mm.x0, mm.y0);
      const WindowIdx w = window_indices(traj.t, settle, settle + window);
      std::tie(mm.y_min, mm.y_max) = min_max(traj.y, w);
      double sup = 0.0, mean_y = 0.0;
      for (std::size_t i = w.lo; i <= w.hi; ++i) {
        sup = std::max(sup, std::abs(traj.x[i] - cfg.a) +
                                std::abs(traj.y[i] - f_a));
        mean_y += traj.y[i];
      }
      mm.sup_eq_dist = sup;
      mm.mean_y = mean_y / static_cast<double>(w.hi - w.lo + 1);

      const WindowIdx w2 =
          window_indices(traj.t, 2.0 * settle, 2.0 * settle + window);
      double sup2 = 0.0;
      for (std::size_t i = w2.lo; i <= w2.hi; ++i) {
        sup2 = std::max(sup2, std::abs(traj.x[i] - cfg.a) +
                                  std::abs(traj.y[i] - f_a));
      }
      mm.sup_eq_dist_late = sup2;

      // Large-excursion counter over the whole run: a visit to the opposite
      // outer branch, with hysteresis over (a0, a1) so diffusion around the
      // threshold is not double-counted.
      const double arm_level = left_side ? m.a0() : m.a1();
      const double fire_level = left_side ? m.a1() : m.a0();
      bool armed = false;
      int excursions = 0;
      for (std::size_t i = 0; i < traj.t.size(); ++i) {
        const double x = traj.x[i];
        if (left_side) {
          if (x < arm_level) armed = true;
          if (armed && x > fire_level) {
            ++excursions;
            armed = false;
          }
        } else {
          if (x > arm_level) armed = true;
          if (armed && x < fire_level) {
            ++excursions;
            armed = false;
          }
        }
      }
      mm.excursions = excursions;
    } catch (const NumericalError&) {
      mm.failed = true;
    }
    rep.replicas[static_cast<std::size_t>(r)] = mm;
  });

  aggregate_common(rep);
  int n_ok = 0, dist_gt = 0, at_most_one = 0;
  std::vector<double> means;
  for (const auto& r : rep.replicas) {
    if (r.failed) continue;
    ++n_ok;
    if (r.sup_eq_dist > cfg.h) ++dist_gt;
    if (r.excursions <= 1) ++at_most_one;
    means.push_back(r.mean_y);
  }
  rep.p_eq_dist_gt_h = wilson_interval(dist_gt, n_ok);
  rep.p_at_most_one_excursion = wilson_interval(at_most_one, n_ok);
  rep.mean_y_after_settle = mean_of(means);
  rep.mean_y_min = kNaN;
  rep.mean_y_max = kNaN;
  rep.mean_period = kNaN;
  return rep;
}

// ---------------------------------------------------------------------------
// verify_degenerate
// ---------------------------------------------------------------------------

VerificationReport verify_degenerate(const ScenarioConfig& cfg) {
  if (cfg.regime != Regime::degenerate) {
    throw std::domain_error("verify_degenerate requires regime 'degenerate'");
  }
  check_delta(cfg);
  const CubicModel m(cfg.alpha, cfg.beta);
  const SeparatrixData sep = separatrix_point(m);
  if (!(cfg.c > sep.S)) {
    throw std::domain_error("degenerate regime requires c > S");
  }
  const BranchTriple star = m.branch_roots(sep.y_star);
  if (!(cfg.a > star.x_minus && cfg.a < star.x_plus)) {
    throw std::domain_error(
        "degenerate regime requires a in (x_minus*(y*), x_plus*(y*))");
  }

  const double dt = resolve_dt(cfg);
  const double eps = cfg.epsilon();
  const double band = m.f_a1() - m.f_a0();

  double y0_lo = cfg.y0_min, y0_hi = cfg.y0_max;
  if (!(y0_hi > y0_lo)) {
    y0_lo = m.f_a0() + 0.25 * band;
    y0_hi = m.f_a1() - 0.25 * band;
  }
  if (!(y0_lo > m.f_a0() && y0_hi < m.f_a1())) {
    throw std::domain_error("y0 range must lie inside (f(a0), f(a1))");
  }

  // Slow transit toward y*; both outer-branch speeds are bounded below by
  // the distance from a to the separatrix branch points.
  const double speed_bound =
      std::min(star.x_plus - cfg.a, cfg.a - star.x_minus);
  double settle = cfg.settle_time;
  if (!(settle > 0.0)) {
    const double travel =
        std::max(std::abs(y0_lo - sep.y_star), std::abs(y0_hi - sep.y_star));
    settle = 2.0 + 2.0 * travel / speed_bound;
  }
  const double window = cfg.window > 0.0 ? cfg.window : 5.0;
  const double horizon = 2.0 * settle + window;
  const std::size_t stride = resolve_stride(cfg, horizon, dt);

  VerificationReport rep;
  rep.config = cfg;
  rep.epsilon = eps;
  rep.y_star = sep.y_star;
  rep.S = sep.S;
  rep.T1 = kNaN;
  rep.T2 = kNaN;
  rep.y_minus = kNaN;
  rep.y_plus = kNaN;
  rep.x_minus_c = star.x_minus;
  rep.x_plus_c = star.x_plus;
  rep.f_a = m.f(cfg.a);
  rep.settle_used = settle;
  rep.window_used = window;
  rep.dt_used = dt;
  rep.stride_used = stride;
  rep.replicas.resize(static_cast<std::size_t>(cfg.replicas));

  constexpr int kBins = 64;
  const double hist_lo = star.x_minus - 1.0;
  const double hist_hi = star.x_plus + 1.0;
  const double bin_w = (hist_hi - hist_lo) / kBins;
  std::vector<std::vector<double>> hists(
      static_cast<std::size_t>(cfg.replicas));

  parallel_for(cfg.replicas, cfg.threads, [&](int r) {
    ReplicaMetrics mm;
    Rng init(derive_replica_seed(cfg.seed, 2 * static_cast<std::uint64_t>(r)));
    mm.y0 = y0_lo + (y0_hi - y0_lo) * init.uniform01();
    const BranchTriple roots = m.branch_roots(mm.y0);
    mm.x0 = (mm.y0 <= sep.y_star) ? roots.x_plus : roots.x_minus;
    mm.sim_seed =
        derive_replica_seed(cfg.seed, 2 * static_cast<std::uint64_t>(r) + 1);
    mm.period = kNaN;
    mm.align_shift = kNaN;
    mm.sup_y_psi = kNaN;
    mm.l2_x_phi = kNaN;
    mm.sup_y_psi_late = kNaN;
    mm.sup_eq_dist = kNaN;
    mm.sup_eq_dist_late = kNaN;
    try {
      const SimParams p{cfg.a, cfg.delta, eps, dt, horizon, mm.sim_seed,
                        stride};
      const Trajectory traj = simulate_full(m, p, mm.x0, mm.y0);
      const WindowIdx w = window_indices(traj.t, settle, settle + window);
      std::tie(mm.y_min, mm.y_max) = min_max(traj.y, w);
      std::vector<double> hist(kBins, 0.0);
      double sup = 0.0, mean_y = 0.0;
      for (std::size_t i = w.lo; i <= w.hi; ++i) {
        sup = std::max(sup, std::abs(traj.y[i] - sep.y_star));
        mean_y += traj.y[i];
        const int bin = static_cast<int>((traj.x[i] - hist_lo) / bin_w);
        if (bin >= 0 && bin < kBins) hist[static_cast<std::size_t>(bin)] += 1.0;
      }
      mm.sup_y_ystar = sup;
      mm.mean_y = mean_y / static_cast<double>(w.hi - w.lo + 1);
      hists[static_cast<std::size_t>(r)] = std::move(hist);

      const WindowIdx w2 =
          window_indices(traj.t, 2.0 * settle, 2.0 * settle + window);
      double sup2 = 0.0;
      for (std::size_t i = w2.lo; i <= w2.hi; ++i) {
        sup2 = std::max(sup2, std::abs(traj.y[i] - sep.y_star));
      }
      mm.sup_y_ystar_late = sup2;
    } catch (const NumericalError&) {
      mm.failed = true;
    }
    rep.replicas[static_cast<std::size_t>(r)] = mm;
  });

  aggregate_common(rep);
  int n_ok = 0, sup_gt = 0;
  std::vector<double> means;
  std::vector<double> mass(kBins, 0.0);
  for (int r = 0; r < cfg.replicas; ++r) {
    const auto& rm = rep.replicas[static_cast<std::size_t>(r)];
    if (rm.failed) continue;
    ++n_ok;
    if (rm.sup_y_ystar > cfg.h) ++sup_gt;
    means.push_back(rm.mean_y);
    const auto& h = hists[static_cast<std::size_t>(r)];
    for (int b = 0; b < kBins; ++b) mass[static_cast<std::size_t>(b)] += h[static_cast<std::size_t>(b)];
  }
  rep.p_sup_ystar_gt_h = wilson_interval(sup_gt, n_ok);
  rep.mean_y_after_settle = mean_of(means);
  rep.mean_y_min = kNaN;
  rep.mean_y_max = kNaN;
  rep.mean_period = kNaN;

  const double total =
      std::max(1.0, std::accumulate(mass.begin(), mass.end(), 0.0));
  rep.x_hist_centers.resize(kBins);
  rep.x_hist_mass.resize(kBins);
  for (int b = 0; b < kBins; ++b) {
    rep.x_hist_centers[static_cast<std::size_t>(b)] =
        hist_lo + (b + 0.5) * bin_w;
    rep.x_hist_mass[static_cast<std::size_t>(b)] =
        mass[static_cast<std::size_t>(b)] / total;
  }
  // Mode finder: local maxima of the 3-bin smoothed histogram carrying at
  // least 2% of the mass.
  std::vector<double> smooth(kBins, 0.0);
  for (int b = 0; b < kBins; ++b) {
    double acc = rep.x_hist_mass[static_cast<std::size_t>(b)];
    int cnt = 1;
    if (b > 0) { acc += rep.x_hist_mass[static_cast<std::size_t>(b - 1)]; ++cnt; }
    if (b + 1 < kBins) { acc += rep.x_hist_mass[static_cast<std::size_t>(b + 1)]; ++cnt; }
    smooth[static_cast<std::size_t>(b)] = acc / cnt;
  }
  for (int b = 1; b + 1 < kBins; ++b) {
    const double v = smooth[static_cast<std::size_t>(b)];
    if (v >= smooth[static_cast<std::size_t>(b - 1)] &&
        v > smooth[static_cast<std::size_t>(b + 1)] && v >= 0.02) {
      rep.x_modes.push_back(rep.x_hist_centers[static_cast<std::size_t>(b)]);
    }
  }
  // Occupation near the three frozen-y* equilibria.
  double occ_l = 0.0, occ_m = 0.0, occ_r = 0.0;
  for (int b = 0; b < kBins; ++b) {
    const double xc = rep.x_hist_centers[static_cast<std::size_t>(b)];
    const double mb = rep.x_hist_mass[static_cast<std::size_t>(b)];
    if (std::abs(xc - star.x_minus) < 0.5) occ_l += mb;
    if (std::abs(xc - star.x_zero) < 0.5) occ_m += mb;
    if (std::abs(xc - star.x_plus) < 0.5) occ_r += mb;
  }
  rep.occupation_left = occ_l;
  rep.occupation_mid = occ_m;
  rep.occupation_right = occ_r;
  return rep;
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

namespace {

nlohmann::json wilson_json(const WilsonInterval& w) {
  return nlohmann::json{{"p", w.p_hat},
                        {"lo", w.lo},
                        {"hi", w.hi},
                        {"successes", w.successes},
                        {"n", w.n}};
}

}  // namespace

nlohmann::json VerificationReport::to_json() const {
  nlohmann::json j{
      {"config", config.to_json()},
      {"derived",
       {{"epsilon", epsilon},
        {"y_star", y_star},
        {"S", S},
        {"S_half", 0.5 * S},
        {"T1", T1},
        {"T2", T2},
        {"T", T1 + T2},
        {"y_minus", y_minus},
        {"y_plus", y_plus},
        {"x_minus_c", x_minus_c},
        {"x_plus_c", x_plus_c},
        {"f_a", f_a},
        {"settle", settle_used},
        {"window", window_used},
        {"dt", dt_used},
        {"record_stride", stride_used}}},
      {"failed_replicas", failed_replicas},
      {"estimates",
       {{"p_sup_y_psi_gt_h", wilson_json(p_sup_y_psi_gt_h)},
        {"p_l2_x_phi_gt_h", wilson_json(p_l2_x_phi_gt_h)},
        {"p_oscillating", wilson_json(p_oscillating)},
        {"p_eq_dist_gt_h", wilson_json(p_eq_dist_gt_h)},
        {"p_at_most_one_excursion", wilson_json(p_at_most_one_excursion)},
        {"p_sup_ystar_gt_h", wilson_json(p_sup_ystar_gt_h)},
        {"mean_y_min", mean_y_min},
        {"mean_y_max", mean_y_max},
        {"mean_period", mean_period},
        {"mean_y_after_settle", mean_y_after_settle}}},
  };
  if (!x_hist_centers.empty()) {
    j["x_occupation"] = {{"centers", x_hist_centers},
                         {"mass", x_hist_mass},
                         {"modes", x_modes},
                         {"near_left", occupation_left},
                         {"near_mid", occupation_mid},
                         {"near_right", occupation_right}};
  }
  return j;
}

std::string VerificationReport::replicas_csv() const {
  std::ostringstream out;
  out << "replica,seed,x0,y0,failed,y_min,y_max,upcrossings,period,"
         "oscillating,align_shift,sup_y_psi,l2_x_phi,sup_y_psi_late,"
         "sup_eq_dist,sup_eq_dist_late,excursions,mean_y,sup_y_ystar,"
         "sup_y_ystar_late\n";
  for (std::size_t i = 0; i < replicas.size(); ++i) {
    const auto& r = replicas[i];
    out << i << ',' << r.sim_seed << ',' << format_double(r.x0) << ','
        << format_double(r.y0) << ',' << (r.failed ? 1 : 0) << ','
        << format_double(r.y_min) << ',' << format_double(r.y_max) << ','
        << r.upcrossings << ',' << format_double(r.period) << ','
        << (r.oscillating ? 1 : 0) << ',' << format_double(r.align_shift)
        << ',' << format_double(r.sup_y_psi) << ','
        << format_double(r.l2_x_phi) << ',' << format_double(r.sup_y_psi_late)
        << ',' << format_double(r.sup_eq_dist) << ','
        << format_double(r.sup_eq_dist_late) << ',' << r.excursions << ','
        << format_double(r.mean_y) << ',' << format_double(r.sup_y_ystar)
        << ',' << format_double(r.sup_y_ystar_late) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// exit_time_study
// ---------------------------------------------------------------------------

nlohmann::json ExitStudyConfig::to_json() const {
  return nlohmann::json{{"model", {{"alpha", alpha}, {"beta", beta}}},
                        {"ys", ys},
                        {"eps_tildes", eps_tildes},
                        {"replicas", replicas},
                        {"basin", basin == BasinId::d1 ? "D1" : "D2"},
                        {"dt", dt},
                        {"horizon_cap", horizon_cap},
                        {"horizon_mult", horizon_mult},
                        {"seed", seed},
                        {"threads", threads},
                        {"c", c},
                        {"delta_levels", delta_levels},
                        {"classification_replicas", classification_replicas}};
}

ExitStudyConfig ExitStudyConfig::from_json(const nlohmann::json& j_in) {
  const nlohmann::json& j = j_in.contains("config") ? j_in.at("config") : j_in;
  ExitStudyConfig cfg;
  if (j.contains("model")) {
    cfg.alpha = j.at("model").value("alpha", cfg.alpha);
    cfg.beta = j.at("model").value("beta", cfg.beta);
  }
  cfg.ys = j.value("ys", cfg.ys);
  cfg.eps_tildes = j.value("eps_tildes", cfg.eps_tildes);
  cfg.replicas = j.value("replicas", cfg.replicas);
  if (j.contains("basin")) {
    cfg.basin =
        j.at("basin").get<std::string>() == "D2" ? BasinId::d2 : BasinId::d1;
  }
  cfg.dt = j.value("dt", cfg.dt);
  cfg.horizon_cap = j.value("horizon_cap", cfg.horizon_cap);
  cfg.horizon_mult = j.value("horizon_mult", cfg.horizon_mult);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.threads = j.value("threads", cfg.threads);
  cfg.c = j.value("c", cfg.c);
  cfg.delta_levels = j.value("delta_levels", cfg.delta_levels);
  cfg.classification_replicas =
      j.value("classification_replicas", cfg.classification_replicas);
  return cfg;
}

ExitStudyReport exit_time_study(const ExitStudyConfig& cfg) {
  if (cfg.ys.empty() || cfg.eps_tildes.empty()) {
    throw std::domain_error("exit_time_study: ys and eps_tildes must be "
                            "non-empty");
  }
  if (cfg.replicas < 2) {
    throw std::domain_error("exit_time_study: replicas must be >= 2");
  }
  const CubicModel m(cfg.alpha, cfg.beta);

  ExitStudyReport rep;
  rep.config = cfg;

  const auto v_ref_of = [&](double y) {
    return cfg.basin == BasinId::d1 ? v_minus(m, y) : v_plus(m, y);
  };
  const auto horizon_of = [&](double v_ref, double eps) {
    const double kramers = cfg.horizon_mult * std::exp(v_ref / eps);
    return std::max(100.0 * cfg.dt, std::min(cfg.horizon_cap, kramers));
  };

  const std::size_t n_levels = cfg.ys.size() * cfg.eps_tildes.size();
  const std::size_t n_total = n_levels * static_cast<std::size_t>(cfg.replicas);
  rep.observations.resize(n_total);

  parallel_for(static_cast<int>(n_total), cfg.threads, [&](int k) {
    const std::size_t level = static_cast<std::size_t>(k) /
                              static_cast<std::size_t>(cfg.replicas);
    const int replica = k % cfg.replicas;
    const double y = cfg.ys[level / cfg.eps_tildes.size()];
    const double eps = cfg.eps_tildes[level % cfg.eps_tildes.size()];
    const double horizon = horizon_of(v_ref_of(y), eps);
    const ExitSample s =
        first_exit(m, y, eps, cfg.basin, cfg.dt, horizon,
                   derive_replica_seed(cfg.seed, static_cast<std::uint64_t>(k)));
    rep.observations[static_cast<std::size_t>(k)] =
        ExitObservation{y, eps, replica, s.tau, s.side};
  });

  for (double y : cfg.ys) {
    for (double eps : cfg.eps_tildes) {
      ExitLevelStats st;
      st.y = y;
      st.eps_tilde = eps;
      st.horizon = horizon_of(v_ref_of(y), eps);
      double sum = 0.0, sum2 = 0.0;
      int n_unc = 0;
      for (const auto& obs : rep.observations) {
        if (obs.y != y || obs.eps_tilde != eps) continue;
        ++st.n;
        if (obs.side == ExitSide::censored) {
          ++st.censored;
        } else {
          sum += obs.tau;
          sum2 += obs.tau * obs.tau;
          ++n_unc;
        }
      }
      st.mean_tau = n_unc > 0 ? sum / n_unc : kNaN;
      st.sd_tau = n_unc > 1 ? std::sqrt(std::max(
                                  0.0, (sum2 - sum * sum / n_unc) / (n_unc - 1)))
                            : kNaN;
      st.usable = st.censored * 2 <= st.n && n_unc >= 2;
      rep.levels.push_back(st);
    }
  }

  for (double y : cfg.ys) {
    ExitRegression reg;
    reg.y = y;
    reg.v_ref = v_ref_of(y);
    std::vector<double> xs, ys_ln;
    for (const auto& st : rep.levels) {
      if (st.y != y || !st.usable || !(st.mean_tau > 0.0)) continue;
      xs.push_back(1.0 / st.eps_tilde);
      ys_ln.push_back(std::log(st.mean_tau));
    }
    reg.usable_levels = static_cast<int>(xs.size());
    if (xs.size() >= 2) {
      const double mx = mean_of(xs), my = mean_of(ys_ln);
      double sxx = 0.0, sxy = 0.0, syy = 0.0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys_ln[i] - my);
        syy += (ys_ln[i] - my) * (ys_ln[i] - my);
      }
      reg.slope = sxy / sxx;
      reg.intercept = my - reg.slope * mx;
      reg.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
      reg.slope_rel_err = std::abs(reg.slope - reg.v_ref) / reg.v_ref;
    } else {
      reg.slope = kNaN;
      reg.intercept = kNaN;
      reg.r2 = kNaN;
      reg.slope_rel_err = kNaN;
    }
    rep.regressions.push_back(reg);
  }

  // Original-time classification across delta levels (tau = delta *
  // tau_tilde; medians include censored values, so they are meaningful only
  // while censoring stays below one half).
  if (cfg.c > 0.0 && cfg.delta_levels.size() >= 2) {
    std::uint64_t salt = 0x517CC1B727220A95ULL;
    for (double y : cfg.ys) {
      ExitClassification cl;
      cl.y = y;
      cl.v_ref = v_ref_of(y);
      cl.predicted_instant = cl.v_ref < cfg.c;
      std::vector<double> deltas = cfg.delta_levels;
      std::sort(deltas.begin(), deltas.end(), std::greater<double>());
      for (double delta : deltas) {
        const double eps = cfg.c / std::abs(std::log(delta));
        const double horizon = horizon_of(cl.v_ref, eps);
        std::vector<double> taus(
            static_cast<std::size_t>(cfg.classification_replicas));
        parallel_for(cfg.classification_replicas, cfg.threads, [&](int r) {
          const ExitSample s = first_exit(
              m, y, eps, cfg.basin, cfg.dt, horizon,
              derive_replica_seed(cfg.seed ^ salt,
                                  static_cast<std::uint64_t>(r)));
          taus[static_cast<std::size_t>(r)] = delta * s.tau;
        });
        cl.deltas.push_back(delta);
        cl.median_tau.push_back(median_of(taus));
        salt = splitmix64(salt);
      }
      cl.empirical_instant = cl.median_tau.back() < cl.median_tau.front();
      cl.match = cl.empirical_instant == cl.predicted_instant;
      rep.classifications.push_back(cl);
    }
  }
  return rep;
}

nlohmann::json ExitStudyReport::to_json() const {
  nlohmann::json levels_j = nlohmann::json::array();
  for (const auto& st : levels) {
    levels_j.push_back({{"y", st.y},
                        {"eps_tilde", st.eps_tilde},
                        {"horizon", st.horizon},
                        {"n", st.n},
                        {"censored", st.censored},
                        {"mean_tau", st.mean_tau},
                        {"sd_tau", st.sd_tau},
                        {"usable", st.usable}});
  }
  nlohmann::json regs_j = nlohmann::json::array();
  for (const auto& rg : regressions) {
    regs_j.push_back({{"y", rg.y},
                      {"V_ref", rg.v_ref},
                      {"slope", rg.slope},
                      {"intercept", rg.intercept},
                      {"r2", rg.r2},
                      {"usable_levels", rg.usable_levels},
                      {"slope_rel_err", rg.slope_rel_err}});
  }
  nlohmann::json cls_j = nlohmann::json::array();
  for (const auto& cl : classifications) {
    cls_j.push_back({{"y", cl.y},
                     {"V_ref", cl.v_ref},
                     {"predicted_instant", cl.predicted_instant},
                     {"deltas", cl.deltas},
                     {"median_tau", cl.median_tau},
                     {"empirical_instant", cl.empirical_instant},
                     {"match", cl.match}});
  }
  return nlohmann::json{{"config", config.to_json()},
                        {"levels", levels_j},
                        {"regressions", regs_j},
                        {"classifications", cls_j}};
}

std::string ExitStudyReport::observations_csv() const {
  std::ostringstream out;
  out << "replica,y,eps_tilde,tau,side,censored\n";
  for (const auto& obs : observations) {
    const char* side = obs.side == ExitSide::left_exit    ? "left"
                       : obs.side == ExitSide::right_exit ? "right"
                                                          : "censored";
    out << obs.replica << ',' << format_double(obs.y) << ','
        << format_double(obs.eps_tilde) << ',' << format_double(obs.tau)
        << ',' << side << ',' << (obs.side == ExitSide::censored ? 1 : 0)
        << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// bifurcation_scan
// ---------------------------------------------------------------------------

nlohmann::json ScanConfig::to_json() const {
  return nlohmann::json{{"model", {{"alpha", alpha}, {"beta", beta}}},
                        {"c", c},
                        {"delta", delta},
                        {"a_min", a_min},
                        {"a_max", a_max},
                        {"a_step", a_step},
                        {"span", span},
                        {"replicas", replicas},
                        {"window", window},
                        {"settle", settle},
                        {"dt", dt},
                        {"seed", seed},
                        {"threads", threads}};
}

ScanConfig ScanConfig::from_json(const nlohmann::json& j_in) {
  const nlohmann::json& j = j_in.contains("config") ? j_in.at("config") : j_in;
  ScanConfig cfg;
  if (j.contains("model")) {
    cfg.alpha = j.at("model").value("alpha", cfg.alpha);
    cfg.beta = j.at("model").value("beta", cfg.beta);
  }
  cfg.c = j.value("c", cfg.c);
  cfg.delta = j.value("delta", cfg.delta);
  cfg.a_min = j.value("a_min", cfg.a_min);
  cfg.a_max = j.value("a_max", cfg.a_max);
  cfg.a_step = j.value("a_step", cfg.a_step);
  cfg.span = j.value("span", cfg.span);
  cfg.replicas = j.value("replicas", cfg.replicas);
  cfg.window = j.value("window", cfg.window);
  cfg.settle = j.value("settle", cfg.settle);
  cfg.dt = j.value("dt", cfg.dt);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.threads = j.value("threads", cfg.threads);
  return cfg;
}

ScanReport bifurcation_scan(const ScanConfig& cfg) {
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) {
    throw std::domain_error("scan delta must lie in (0, 1)");
  }
  if (!(cfg.a_step > 0.0)) {
    throw std::domain_error("scan a_step must be positive");
  }
  const CubicModel m(cfg.alpha, cfg.beta);
  const NoiseLevelData nl = level_crossings(m, cfg.c);

  double a_min = cfg.a_min, a_max = cfg.a_max;
  if (!(a_max > a_min)) {
    a_min = nl.x_minus - cfg.span;
    a_max = nl.x_minus + cfg.span;
  }
  if (!(a_min < nl.x_minus && a_max > nl.x_minus)) {
    throw std::domain_error("scan grid must straddle x_minus(c) = " +
                            std::to_string(nl.x_minus));
  }

  std::vector<double> grid;
  for (double a = a_min; a <= a_max + 1e-12; a += cfg.a_step) grid.push_back(a);

  const double dt = cfg.dt > 0.0 ? cfg.dt : cfg.delta / 50.0;
  const double eps = cfg.c * cfg.delta / std::abs(std::log(cfg.delta));
  const double horizon = cfg.settle + cfg.window;
  const std::size_t stride = std::max<std::size_t>(
      1, static_cast<std::size_t>(horizon / dt) / 20000);
  const double midline = 0.5 * (nl.y_minus + nl.y_plus);
  const double band_margin = 0.01 * (m.f_a1() - m.f_a0());

  ScanReport rep;
  rep.config = cfg;
  rep.epsilon = eps;
  rep.x_minus_c = nl.x_minus;
  rep.a0 = m.a0();
  rep.points.resize(grid.size());

  const int jobs = static_cast<int>(grid.size()) * cfg.replicas;
  std::vector<std::vector<double>> amplitudes(grid.size());
  std::vector<std::vector<int>> crossings(grid.size());
  for (auto& v : amplitudes) v.resize(static_cast<std::size_t>(cfg.replicas));
  for (auto& v : crossings) v.resize(static_cast<std::size_t>(cfg.replicas));

  parallel_for(jobs, cfg.threads, [&](int k) {
    const std::size_t gi = static_cast<std::size_t>(k) /
                           static_cast<std::size_t>(cfg.replicas);
    const int r = k % cfg.replicas;
    const double a = grid[gi];
    const double y0 = std::clamp(m.f(a), m.f_a0() + band_margin,
                                 m.f_a1() - band_margin);
    const double x0 = m.branch_roots(y0).x_minus;
    const SimParams p{a, cfg.delta, eps, dt, horizon,
                      derive_replica_seed(cfg.seed,
                                          static_cast<std::uint64_t>(k)),
                      stride};
    try {
      const Trajectory traj = simulate_full(m, p, x0, y0);
      const WindowIdx w =
          window_indices(traj.t, cfg.settle, cfg.settle + cfg.window);
      const auto [lo, hi] = min_max(traj.y, w);
      amplitudes[gi][static_cast<std::size_t>(r)] = 0.5 * (hi - lo);
      crossings[gi][static_cast<std::size_t>(r)] =
          upcrossings(traj.t, traj.y, w, midline).count;
    } catch (const NumericalError&) {
      amplitudes[gi][static_cast<std::size_t>(r)] = kNaN;
      crossings[gi][static_cast<std::size_t>(r)] = 0;
    }
  });

  // Deterministic control (epsilon = 0), one run per grid point.
  parallel_for(static_cast<int>(grid.size()), cfg.threads, [&](int gi_int) {
    const std::size_t gi = static_cast<std::size_t>(gi_int);
    const double a = grid[gi];
    const double y0 = std::clamp(m.f(a) + 0.1, m.f_a0() + band_margin,
                                 m.f_a1() - band_margin);
    const double x0 = m.branch_roots(y0).x_minus;
    const SimParams p{a, cfg.delta, 0.0, dt, horizon, 0, stride};
    double amp = kNaN;
    try {
      const Trajectory traj = simulate_full(m, p, x0, y0);
      const WindowIdx w =
          window_indices(traj.t, cfg.settle, cfg.settle + cfg.window);
      const auto [lo, hi] = min_max(traj.y, w);
      amp = 0.5 * (hi - lo);
    } catch (const NumericalError&) {
    }
    rep.points[gi].deterministic_amplitude = amp;
  });

  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    auto& pt = rep.points[gi];
    pt.a = grid[gi];
    std::vector<double> clean;
    int oscillating = 0, n_ok = 0;
    for (int r = 0; r < cfg.replicas; ++r) {
      const double amp = amplitudes[gi][static_cast<std::size_t>(r)];
      if (std::isnan(amp)) continue;
      ++n_ok;
      clean.push_back(amp);
      if (crossings[gi][static_cast<std::size_t>(r)] >= 3) ++oscillating;
    }
    pt.median_amplitude = median_of(clean);
    pt.oscillating_fraction =
        n_ok > 0 ? static_cast<double>(oscillating) / n_ok : kNaN;
  }

  double amp_max = 0.0;
  for (const auto& pt : rep.points) {
    if (!std::isnan(pt.median_amplitude))
      amp_max = std::max(amp_max, pt.median_amplitude);
  }
  rep.amplitude_max = amp_max;
  rep.transition_found = false;
  rep.detected_transition = kNaN;
  if (amp_max > 0.2) {
    const double thr = 0.5 * amp_max;
    for (std::size_t gi = 1; gi < rep.points.size(); ++gi) {
      if (rep.points[gi - 1].median_amplitude < thr &&
          rep.points[gi].median_amplitude >= thr) {
        rep.detected_transition =
            0.5 * (rep.points[gi - 1].a + rep.points[gi].a);
        rep.transition_found = true;
        break;
      }
    }
    for (const auto& pt : rep.points) {
      if (pt.a > nl.x_minus && pt.a < m.a0() && pt.median_amplitude >= thr &&
          pt.deterministic_amplitude < 0.05) {
        rep.noise_oscillates_quiescent_a = true;
        break;
      }
    }
  }
  return rep;
}

nlohmann::json ScanReport::to_json() const {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& pt : points) {
    pts.push_back({{"a", pt.a},
                   {"median_amplitude", pt.median_amplitude},
                   {"oscillating_fraction", pt.oscillating_fraction},
                   {"deterministic_amplitude", pt.deterministic_amplitude}});
  }
  return nlohmann::json{{"config", config.to_json()},
                        {"epsilon", epsilon},
                        {"x_minus_c", x_minus_c},
                        {"a0", a0},
                        {"points", pts},
                        {"amplitude_max", amplitude_max},
                        {"transition_found", transition_found},
                        {"detected_transition", detected_transition},
                        {"noise_oscillates_quiescent_a",
                         noise_oscillates_quiescent_a}};
}

std::string ScanReport::points_csv() const {
  std::ostringstream out;
  out << "a,median_amplitude,oscillating_fraction,deterministic_amplitude\n";
  for (const auto& pt : points) {
    out << format_double(pt.a) << ',' << format_double(pt.median_amplitude)
        << ',' << format_double(pt.oscillating_fraction) << ','
        << format_double(pt.deterministic_amplitude) << '\n';
  }
  return out.str();
}

}  // namespace fhn
