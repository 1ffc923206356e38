#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fhn/cubic_model.hpp"
#include "fhn/cycle_predictor.hpp"
#include "fhn/quasipotential.hpp"
#include "fhn/sde_engine.hpp"

namespace fhn {

/// Long-run regimes of the stochastic system, selected by c against S and by
/// a against the noise-induced bifurcation points (c < S) or the separatrix
/// branch values (c > S).
enum class Regime { cycle, equilibrium, degenerate, equilibrium_high };

std::string to_string(Regime regime);
Regime regime_from_string(const std::string& name);

/// One Monte Carlo scenario. epsilon is always derived from (c, delta) as
/// epsilon = c * delta / |log delta| (natural log), so the scaling
/// hypothesis holds with equality. Zero-valued optional fields are resolved
/// to defaults at run time and echoed in the report.
struct ScenarioConfig {
  double alpha = -2.0;
  double beta = 2.0;
  Regime regime = Regime::cycle;
  double c = 2.0;
  double a = -1.3;
  double delta = 0.005;
  int replicas = 100;
  double h = 0.5;          // tolerance in the probability statements
  double window = 0.0;     // observation window A after settling; 0 = auto
  double y0_min = 0.0;     // initial slow-variable range; equal bounds = auto
  double y0_max = 0.0;
  double settle_time = 0.0;  // 0 = auto (period or transit-based surrogate)
  double dt = 0.0;           // 0 = auto (delta / 50)
  std::size_t record_stride = 0;  // 0 = auto (~40k recorded samples)
  std::uint64_t seed = 1;
  int threads = 0;  // worker cap; 0 = hardware concurrency

  double epsilon() const;

  nlohmann::json to_json() const;
  /// Accepts either a scenario object or a full report (uses its "config").
  static ScenarioConfig from_json(const nlohmann::json& j);
};

/// 95% Wilson score interval for a binomial proportion.
struct WilsonInterval {
  double p_hat = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  int successes = 0;
  int n = 0;
};

WilsonInterval wilson_interval(int successes, int n);

/// Per-replica measurements; fields not applicable to the scenario's regime
/// stay NaN. The *_late fields recompute the window with the settle time
/// doubled (sensitivity check on the settling surrogate).
struct ReplicaMetrics {
  std::uint64_t sim_seed = 0;
  double x0 = 0.0;
  double y0 = 0.0;
  bool failed = false;

  double y_min = 0.0;
  double y_max = 0.0;
  int upcrossings = 0;
  double period = 0.0;
  bool oscillating = false;

  double align_shift = 0.0;
  double sup_y_psi = 0.0;
  double l2_x_phi = 0.0;
  double sup_y_psi_late = 0.0;

  double sup_eq_dist = 0.0;
  double sup_eq_dist_late = 0.0;
  int excursions = 0;

  double mean_y = 0.0;
  double sup_y_ystar = 0.0;
  double sup_y_ystar_late = 0.0;
};

/// Aggregated verification results plus everything needed to reproduce them.
struct VerificationReport {
  ScenarioConfig config;

  double epsilon = 0.0;
  double y_star = 0.0;
  double S = 0.0;
  double T1 = 0.0;
  double T2 = 0.0;
  double y_minus = 0.0;
  double y_plus = 0.0;
  double x_minus_c = 0.0;
  double x_plus_c = 0.0;
  double f_a = 0.0;
  double settle_used = 0.0;
  double window_used = 0.0;
  double dt_used = 0.0;
  std::size_t stride_used = 1;

  std::vector<ReplicaMetrics> replicas;
  int failed_replicas = 0;

  WilsonInterval p_sup_y_psi_gt_h;
  WilsonInterval p_l2_x_phi_gt_h;
  WilsonInterval p_oscillating;
  WilsonInterval p_eq_dist_gt_h;
  WilsonInterval p_at_most_one_excursion;
  WilsonInterval p_sup_ystar_gt_h;

  double mean_y_min = 0.0;
  double mean_y_max = 0.0;
  double mean_period = 0.0;
  double mean_y_after_settle = 0.0;

  std::vector<double> x_hist_centers;
  std::vector<double> x_hist_mass;
  std::vector<double> x_modes;
  double occupation_left = 0.0;
  double occupation_mid = 0.0;
  double occupation_right = 0.0;

  nlohmann::json to_json() const;
  std::string replicas_csv() const;
};

/// Estimates how often the slow/fast pair stays near the predicted cycle:
/// range endpoints, midline-crossing period, probabilities of
/// sup |Y - psi| > h and int |X - phi|^2 dt > h after phase alignment.
/// Requires regime == cycle with c in (0, S) and a in (x_minus(c),
/// x_plus(c)).
VerificationReport verify_limit_cycle(const ScenarioConfig& config);

/// Estimates P(sup (|X - a| + |Y - f(a)|) > h) after settling, plus the
/// count of large excursions before settling. Requires regime equilibrium
/// (c < S, a outside [x_minus(c), x_plus(c)]) or equilibrium_high (c > S,
/// a outside [x_minus*(y*), x_plus*(y*)]).
VerificationReport verify_equilibrium(const ScenarioConfig& config);

/// Estimates P(sup |Y - y_star| > h) after settling and the occupation
/// histogram of X (which keeps oscillating between the outer branches).
/// Requires regime == degenerate (c > S, a inside (x_minus*(y*),
/// x_plus*(y*))).
VerificationReport verify_degenerate(const ScenarioConfig& config);

// ---------------------------------------------------------------------------
// Exit-time study
// ---------------------------------------------------------------------------

struct ExitStudyConfig {
  double alpha = -2.0;
  double beta = 2.0;
  std::vector<double> ys;
  std::vector<double> eps_tildes;
  int replicas = 200;
  BasinId basin = BasinId::d1;
  double dt = 0.005;
  double horizon_cap = 1e4;    // rescaled-time budget per replica
  double horizon_mult = 25.0;  // horizon = min(cap, mult * exp(V_ref/eps))
  std::uint64_t seed = 1;
  int threads = 0;

  // Original-time classification across delta levels; skipped when c == 0
  // or delta_levels is empty.
  double c = 0.0;
  std::vector<double> delta_levels;
  int classification_replicas = 64;

  nlohmann::json to_json() const;
  static ExitStudyConfig from_json(const nlohmann::json& j);
};

struct ExitObservation {
  double y = 0.0;
  double eps_tilde = 0.0;
  int replica = 0;
  double tau = 0.0;
  ExitSide side = ExitSide::censored;
};

struct ExitLevelStats {
  double y = 0.0;
  double eps_tilde = 0.0;
  double horizon = 0.0;
  int n = 0;
  int censored = 0;
  double mean_tau = 0.0;  // over uncensored replicas
  double sd_tau = 0.0;
  bool usable = true;  // censoring <= 50%
};

struct ExitRegression {
  double y = 0.0;
  double v_ref = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int usable_levels = 0;
  double slope_rel_err = 0.0;  // |slope - v_ref| / v_ref
};

struct ExitClassification {
  double y = 0.0;
  double v_ref = 0.0;
  bool predicted_instant = false;  // v_ref < c
  std::vector<double> deltas;
  std::vector<double> median_tau;  // original time, delta * tau_tilde
  bool empirical_instant = false;  // medians decrease as delta decreases
  bool match = false;
};

struct ExitStudyReport {
  ExitStudyConfig config;
  std::vector<ExitObservation> observations;
  std::vector<ExitLevelStats> levels;
  std::vector<ExitRegression> regressions;
  std::vector<ExitClassification> classifications;

  nlohmann::json to_json() const;
  std::string observations_csv() const;
};

/// For each frozen y: measures first-exit times of the rescaled diffusion
/// over the eps_tilde grid, regresses log(mean tau) on 1/eps_tilde against
/// the quasipotential reference, and (optionally) classifies each y as
/// instant-exit or trapped from original-time medians across delta levels.
/// Levels with censoring above 50% are flagged unusable and excluded from
/// the regression.
ExitStudyReport exit_time_study(const ExitStudyConfig& config);

// ---------------------------------------------------------------------------
// Bifurcation scan
// ---------------------------------------------------------------------------

struct ScanConfig {
  double alpha = -2.0;
  double beta = 2.0;
  double c = 2.0;
  double delta = 0.005;
  double a_min = 0.0;  // equal bounds = auto: x_minus(c) +- span
  double a_max = 0.0;
  double a_step = 0.05;
  double span = 0.3;
  int replicas = 24;
  double window = 25.0;
  double settle = 8.0;
  double dt = 0.0;  // 0 = auto (delta / 50)
  std::uint64_t seed = 1;
  int threads = 0;

  nlohmann::json to_json() const;
  static ScanConfig from_json(const nlohmann::json& j);
};

struct ScanPoint {
  double a = 0.0;
  double median_amplitude = 0.0;
  double oscillating_fraction = 0.0;
  double deterministic_amplitude = 0.0;  // same a with epsilon = 0
};

struct ScanReport {
  ScanConfig config;
  double epsilon = 0.0;
  double x_minus_c = 0.0;
  double a0 = 0.0;
  std::vector<ScanPoint> points;
  double amplitude_max = 0.0;
  double detected_transition = 0.0;
  bool transition_found = false;
  bool noise_oscillates_quiescent_a = false;  // some a in (x_minus(c), a0)

  nlohmann::json to_json() const;
  std::string points_csv() const;
};

/// Sweeps a across x_minus(c), measuring the post-settle oscillation
/// amplitude of Y as order parameter; locates the amplitude jump and checks
/// the headline effect (noise-driven oscillation at deterministically
/// quiescent a, against an epsilon = 0 control). The grid must straddle
/// x_minus(c).
ScanReport bifurcation_scan(const ScanConfig& config);

/// Shared replica-parallel loop: results must be written into per-index
/// slots; aggregation order is then independent of the worker count.
void parallel_for(int n, int threads, const std::function<void(int)>& body);

int hardware_threads_or(int requested);

}  // namespace fhn
