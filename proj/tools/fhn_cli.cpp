// Command-line front end: model geometry, quasipotential tables, predicted
// cycles, stochastic simulation, exit-time studies, scenario verification and
// the bifurcation scan. Every output file starts with a '# <json>' line
// carrying the fully resolved configuration; identical arguments and master
// seed reproduce files byte for byte on the same build.

#include <cstdlib>
#include <exception>
#include <iostream>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fhn/cubic_model.hpp"
#include "fhn/cycle_predictor.hpp"
#include "fhn/errors.hpp"
#include "fhn/experiments.hpp"
#include "fhn/quasipotential.hpp"
#include "fhn/report_io.hpp"
#include "fhn/sde_engine.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::string output_path(const std::string& dir, const std::string& name) {
  if (dir.empty()) return name;
  return dir + "/" + name;
}

std::string default_out_dir() {
  const char* env = std::getenv("FHN_OUTPUT_DIR");
  return env ? env : "";
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::domain_error("cannot read scenario file: " + path);
  json j;
  in >> j;
  return j;
}

// ---------------------------------------------------------------------------

int cmd_model_info(double alpha, double beta, double a, double delta,
                   bool with_eigen) {
  const fhn::CubicModel m(alpha, beta);
  json out{{"alpha", m.alpha()}, {"beta", m.beta()},   {"a0", m.a0()},
           {"a1", m.a1()},       {"f_a0", m.f_a0()},   {"f_a1", m.f_a1()}};
  if (with_eigen) {
    const fhn::EigenPair ev = m.eigenvalues(a, delta);
    out["a"] = a;
    out["delta"] = delta;
    out["lambda_plus"] = {{"re", ev.lambda_plus.real()},
                          {"im", ev.lambda_plus.imag()}};
    out["lambda_minus"] = {{"re", ev.lambda_minus.real()},
                           {"im", ev.lambda_minus.imag()}};
  }
  std::cout << out.dump() << "\n";
  return kExitOk;
}

int cmd_potential(double alpha, double beta, std::vector<double> cs, int grid,
                  const std::string& out_csv, const std::string& out_json) {
  const fhn::CubicModel m(alpha, beta);
  const fhn::SeparatrixData sep = fhn::separatrix_point(m);

  json config{{"subcommand", "potential"},
              {"model", {{"alpha", alpha}, {"beta", beta}}},
              {"c", cs},
              {"grid", grid},
              {"out", out_csv}};

  std::ostringstream csv;
  csv << "y,v_minus,v_plus,x_minus,x_zero,x_plus\n";
  const double span = m.f_a1() - m.f_a0();
  for (int i = 0; i < grid; ++i) {
    const double y = m.f_a0() + (i + 1) * span / (grid + 1);
    const fhn::BranchTriple r = m.branch_roots(y);
    csv << fhn::format_double(y) << ',' << fhn::format_double(fhn::v_minus(m, y))
        << ',' << fhn::format_double(fhn::v_plus(m, y)) << ','
        << fhn::format_double(r.x_minus) << ',' << fhn::format_double(r.x_zero)
        << ',' << fhn::format_double(r.x_plus) << '\n';
  }
  if (!out_csv.empty()) {
    fhn::write_text_file(out_csv, fhn::with_config_header(config, csv.str()));
  }

  json summary{{"y_star", sep.y_star}, {"S", sep.S}, {"S_half", 0.5 * sep.S}};
  json levels = json::array();
  for (double c : cs) {
    const fhn::NoiseLevelData nl = fhn::level_crossings(m, c);
    levels.push_back({{"c", c},
                      {"y_minus", nl.y_minus},
                      {"y_plus", nl.y_plus},
                      {"x_minus_c", nl.x_minus},
                      {"x_plus_c", nl.x_plus}});
  }
  summary["levels"] = levels;
  summary["note"] =
      "S is the common well depth V-(y*) = V+(y*) from the quasipotential "
      "integral; S_half = S/2 is the same quantity under the half-area "
      "convention.";
  if (!out_json.empty()) {
    json file{{"config", config}, {"summary", summary}};
    fhn::write_text_file(out_json, file.dump(2) + "\n");
  }
  std::cout << summary.dump() << "\n";
  return kExitOk;
}

int cmd_cycle(double alpha, double beta, double c, double a, int samples,
              const std::string& out_csv, const std::string& out_json) {
  const fhn::CubicModel m(alpha, beta);
  const fhn::NoiseLevelData nl = fhn::level_crossings(m, c);
  const fhn::CycleSpec spec = fhn::make_cycle_spec(m, nl, a);
  const fhn::CycleSamples cyc =
      fhn::cycle_functions(spec, static_cast<std::size_t>(samples));

  json config{{"subcommand", "cycle"},
              {"model", {{"alpha", alpha}, {"beta", beta}}},
              {"c", c},
              {"a", a},
              {"samples", samples},
              {"out", out_csv}};

  std::ostringstream csv;
  csv << "t,psi,phi,branch\n";
  for (std::size_t i = 0; i < cyc.t.size(); ++i) {
    csv << fhn::format_double(cyc.t[i]) << ',' << fhn::format_double(cyc.psi[i])
        << ',' << fhn::format_double(cyc.phi[i]) << ','
        << (cyc.branch[i] == fhn::Branch::right ? "right" : "left") << '\n';
  }
  if (!out_csv.empty()) {
    fhn::write_text_file(out_csv, fhn::with_config_header(config, csv.str()));
  }

  json summary{{"T1", spec.T1},
               {"T2", spec.T2},
               {"T", spec.period()},
               {"y_minus", nl.y_minus},
               {"y_plus", nl.y_plus},
               {"T1_event", cyc.T1_event},
               {"T2_event", cyc.T2_event}};
  if (!out_json.empty()) {
    json file{{"config", config}, {"summary", summary}};
    fhn::write_text_file(out_json, file.dump(2) + "\n");
  }
  std::cout << summary.dump() << "\n";
  return kExitOk;
}

int cmd_simulate(double alpha, double beta, const fhn::SimParams& params,
                 double c, double x0, double y0, const std::string& out_csv) {
  const fhn::CubicModel m(alpha, beta);
  fhn::SimParams p = params;
  if (c > 0.0) {
    p.epsilon = c * p.delta / std::abs(std::log(p.delta));
  }
  json config{{"subcommand", "simulate"},
              {"model", {{"alpha", alpha}, {"beta", beta}}},
              {"a", p.a},
              {"delta", p.delta},
              {"epsilon", p.epsilon},
              {"dt", p.dt},
              {"horizon", p.horizon},
              {"seed", p.seed},
              {"record_stride", p.record_stride},
              {"x0", x0},
              {"y0", y0},
              {"out", out_csv}};

  const fhn::Trajectory traj = fhn::simulate_full(m, p, x0, y0);
  std::ostringstream csv;
  csv << "t,x,y\n";
  for (std::size_t i = 0; i < traj.t.size(); ++i) {
    csv << fhn::format_double(traj.t[i]) << ',' << fhn::format_double(traj.x[i])
        << ',' << fhn::format_double(traj.y[i]) << '\n';
  }
  if (!out_csv.empty()) {
    fhn::write_text_file(out_csv, fhn::with_config_header(config, csv.str()));
  }
  json summary{{"samples", traj.t.size()},
               {"final_t", traj.t.back()},
               {"final_x", traj.x.back()},
               {"final_y", traj.y.back()},
               {"epsilon", p.epsilon}};
  std::cout << summary.dump() << "\n";
  return kExitOk;
}

int cmd_exit_times(const fhn::ExitStudyConfig& cfg, const std::string& out_csv,
                   const std::string& out_json) {
  const fhn::ExitStudyReport rep = fhn::exit_time_study(cfg);
  if (!out_csv.empty()) {
    fhn::write_text_file(
        out_csv, fhn::with_config_header(cfg.to_json(), rep.observations_csv()));
  }
  if (!out_json.empty()) {
    fhn::write_text_file(out_json, rep.to_json().dump(2) + "\n");
  }
  json summary{{"regressions", json::array()}};
  for (const auto& rg : rep.regressions) {
    summary["regressions"].push_back({{"y", rg.y},
                                      {"slope", rg.slope},
                                      {"intercept", rg.intercept},
                                      {"r2", rg.r2},
                                      {"V_ref", rg.v_ref},
                                      {"usable_levels", rg.usable_levels}});
  }
  std::cout << summary.dump() << "\n";
  return kExitOk;
}

int cmd_verify(const fhn::ScenarioConfig& cfg, const std::string& out_dir) {
  fhn::VerificationReport rep;
  switch (cfg.regime) {
    case fhn::Regime::cycle:
      rep = fhn::verify_limit_cycle(cfg);
      break;
    case fhn::Regime::equilibrium:
    case fhn::Regime::equilibrium_high:
      rep = fhn::verify_equilibrium(cfg);
      break;
    case fhn::Regime::degenerate:
      rep = fhn::verify_degenerate(cfg);
      break;
  }
  const json report = rep.to_json();
  fhn::write_text_file(output_path(out_dir, "report.json"),
                       report.dump(2) + "\n");
  fhn::write_text_file(output_path(out_dir, "replicas.csv"),
                       fhn::with_config_header(cfg.to_json(),
                                               rep.replicas_csv()));
  json summary{{"regime", fhn::to_string(cfg.regime)},
               {"replicas", cfg.replicas},
               {"failed", rep.failed_replicas},
               {"estimates", report.at("estimates")}};
  std::cout << summary.dump() << "\n";
  return kExitOk;
}

int cmd_scan(const fhn::ScanConfig& cfg, const std::string& out_dir) {
  const fhn::ScanReport rep = fhn::bifurcation_scan(cfg);
  fhn::write_text_file(output_path(out_dir, "scan.json"),
                       rep.to_json().dump(2) + "\n");
  fhn::write_text_file(output_path(out_dir, "scan.csv"),
                       fhn::with_config_header(cfg.to_json(),
                                               rep.points_csv()));
  json summary{{"x_minus_c", rep.x_minus_c},
               {"detected_transition", rep.detected_transition},
               {"transition_found", rep.transition_found},
               {"amplitude_max", rep.amplitude_max},
               {"noise_oscillates_quiescent_a",
                rep.noise_oscillates_quiescent_a}};
  std::cout << summary.dump() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic FitzHugh-Nagumo toolbox: quasipotential geometry, "
               "noise-induced cycles, exit times and Monte Carlo verification"};
  app.require_subcommand(1);

  double alpha = -2.0, beta = 2.0;

  // model-info
  auto* info = app.add_subcommand("model-info",
                                  "Cubic geometry: critical points and values");
  double info_a = 0.0, info_delta = 0.0;
  info->add_option("--alpha", alpha, "left root of f (negative)")->required();
  info->add_option("--beta", beta, "right root of f (positive)")->required();
  auto* info_a_opt =
      info->add_option("--a", info_a, "equilibrium parameter for eigenvalues");
  info->add_option("--delta", info_delta, "time-scale separation")
      ->needs(info_a_opt);

  // potential
  auto* pot = app.add_subcommand(
      "potential", "Quasipotential table, separatrix and level crossings");
  std::vector<double> pot_cs;
  int pot_grid = 256;
  std::string pot_out, pot_json;
  pot->add_option("--alpha", alpha)->required();
  pot->add_option("--beta", beta)->required();
  pot->add_option("--c", pot_cs, "noise level(s) in (0, S)");
  pot->add_option("--grid", pot_grid, "interior grid size")
      ->check(CLI::PositiveNumber);
  pot->add_option("--out", pot_out, "CSV output path");
  pot->add_option("--json", pot_json, "JSON summary output path");

  // cycle
  auto* cyc = app.add_subcommand("cycle", "Predicted cycle samples and periods");
  double cyc_c = 2.0, cyc_a = 0.0;
  int cyc_samples = 1024;
  std::string cyc_out, cyc_json;
  cyc->add_option("--alpha", alpha)->required();
  cyc->add_option("--beta", beta)->required();
  cyc->add_option("--c", cyc_c)->required();
  cyc->add_option("--a", cyc_a)->required();
  cyc->add_option("--samples", cyc_samples)->check(CLI::Range(16, 1 << 20));
  cyc->add_option("--out", cyc_out, "CSV output path");
  cyc->add_option("--json", cyc_json, "JSON summary output path");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Euler-Maruyama trajectory");
  fhn::SimParams sp;
  double sim_c = 0.0, sim_x0 = 0.0, sim_y0 = 0.0;
  std::string sim_out;
  sim->add_option("--alpha", alpha)->required();
  sim->add_option("--beta", beta)->required();
  sim->add_option("--a", sp.a)->required();
  sim->add_option("--delta", sp.delta)->required();
  sim->add_option("--epsilon", sp.epsilon, "noise intensity");
  sim->add_option("--c", sim_c,
                  "derive epsilon as c*delta/|log delta| (overrides --epsilon)");
  sim->add_option("--dt", sp.dt)->required();
  sim->add_option("--horizon", sp.horizon)->required();
  sim->add_option("--seed", sp.seed);
  sim->add_option("--stride", sp.record_stride, "record every n-th step");
  sim->add_option("--x0", sim_x0)->required();
  sim->add_option("--y0", sim_y0)->required();
  sim->add_option("--out", sim_out, "CSV output path");

  // exit-times
  auto* ext = app.add_subcommand("exit-times",
                                 "First-exit study of the frozen diffusion");
  fhn::ExitStudyConfig ecfg;
  std::string ext_basin = "D1", ext_out, ext_json;
  ext->add_option("--alpha", alpha)->required();
  ext->add_option("--beta", beta)->required();
  ext->add_option("--y", ecfg.ys, "frozen slow value(s)")->required();
  ext->add_option("--eps", ecfg.eps_tildes, "rescaled noise level(s)")
      ->required();
  ext->add_option("--replicas", ecfg.replicas)->check(CLI::PositiveNumber);
  ext->add_option("--basin", ext_basin, "D1 or D2");
  ext->add_option("--dt", ecfg.dt);
  ext->add_option("--horizon-cap", ecfg.horizon_cap);
  ext->add_option("--horizon-mult", ecfg.horizon_mult);
  ext->add_option("--seed", ecfg.seed);
  ext->add_option("--threads", ecfg.threads);
  ext->add_option("--class-c", ecfg.c,
                  "classification level c (0 = skip classification)");
  ext->add_option("--delta-level", ecfg.delta_levels,
                  "delta levels for original-time classification");
  ext->add_option("--out", ext_out, "per-replica CSV path");
  ext->add_option("--json", ext_json, "full report JSON path");

  // verify
  auto* ver = app.add_subcommand("verify",
                                 "Monte Carlo verification of one scenario");
  std::string ver_scenario, ver_out_dir = default_out_dir(), ver_regime;
  fhn::ScenarioConfig vcfg;
  double ver_alpha = 0.0, ver_beta = 0.0;
  ver->add_option("--scenario", ver_scenario, "scenario JSON file");
  ver->add_option("--alpha", ver_alpha);
  ver->add_option("--beta", ver_beta);
  ver->add_option("--regime", ver_regime,
                  "cycle | equilibrium | degenerate | equilibrium_high");
  auto* vc = ver->add_option("--c", vcfg.c);
  auto* va = ver->add_option("--a", vcfg.a);
  auto* vd = ver->add_option("--delta", vcfg.delta);
  auto* vr = ver->add_option("--replicas", vcfg.replicas);
  auto* vh = ver->add_option("--h-tol", vcfg.h,
                             "tolerance h in the probability statements");
  auto* vw = ver->add_option("--window", vcfg.window);
  auto* vs = ver->add_option("--settle", vcfg.settle_time);
  auto* vdt = ver->add_option("--dt", vcfg.dt);
  auto* vseed = ver->add_option("--seed", vcfg.seed);
  auto* vthr = ver->add_option("--threads", vcfg.threads);
  ver->add_option("--out-dir", ver_out_dir, "output directory");

  // scan
  auto* scn = app.add_subcommand("scan", "Bifurcation scan of a across "
                                         "x_minus(c)");
  std::string scn_scenario, scn_out_dir = default_out_dir();
  fhn::ScanConfig scfg;
  double scn_alpha = 0.0, scn_beta = 0.0;
  scn->add_option("--scenario", scn_scenario, "scan config JSON file");
  scn->add_option("--alpha", scn_alpha);
  scn->add_option("--beta", scn_beta);
  auto* sc = scn->add_option("--c", scfg.c);
  auto* sd = scn->add_option("--delta", scfg.delta);
  auto* smin = scn->add_option("--a-min", scfg.a_min);
  auto* smax = scn->add_option("--a-max", scfg.a_max);
  auto* sstep = scn->add_option("--a-step", scfg.a_step);
  auto* sspan = scn->add_option("--span", scfg.span);
  auto* srep = scn->add_option("--replicas", scfg.replicas);
  auto* swin = scn->add_option("--window", scfg.window);
  auto* sset = scn->add_option("--settle", scfg.settle);
  auto* sdt = scn->add_option("--dt", scfg.dt);
  auto* sseed = scn->add_option("--seed", scfg.seed);
  auto* sthr = scn->add_option("--threads", scfg.threads);
  scn->add_option("--out-dir", scn_out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (info->parsed()) {
      return cmd_model_info(alpha, beta, info_a, info_delta,
                            info_a_opt->count() > 0);
    }
    if (pot->parsed()) {
      return cmd_potential(alpha, beta, pot_cs, pot_grid, pot_out, pot_json);
    }
    if (cyc->parsed()) {
      return cmd_cycle(alpha, beta, cyc_c, cyc_a, cyc_samples, cyc_out,
                       cyc_json);
    }
    if (sim->parsed()) {
      return cmd_simulate(alpha, beta, sp, sim_c, sim_x0, sim_y0, sim_out);
    }
    if (ext->parsed()) {
      ecfg.alpha = alpha;
      ecfg.beta = beta;
      if (ext_basin != "D1" && ext_basin != "D2") {
        throw std::domain_error("--basin must be D1 or D2");
      }
      ecfg.basin = ext_basin == "D2" ? fhn::BasinId::d2 : fhn::BasinId::d1;
      return cmd_exit_times(ecfg, ext_out, ext_json);
    }
    if (ver->parsed()) {
      fhn::ScenarioConfig base;
      if (!ver_scenario.empty()) {
        base = fhn::ScenarioConfig::from_json(load_json_file(ver_scenario));
      }
      // Inline flags override scenario-file values.
      if (ver_alpha != 0.0) base.alpha = ver_alpha;
      if (ver_beta != 0.0) base.beta = ver_beta;
      if (!ver_regime.empty()) base.regime = fhn::regime_from_string(ver_regime);
      if (vc->count()) base.c = vcfg.c;
      if (va->count()) base.a = vcfg.a;
      if (vd->count()) base.delta = vcfg.delta;
      if (vr->count()) base.replicas = vcfg.replicas;
      if (vh->count()) base.h = vcfg.h;
      if (vw->count()) base.window = vcfg.window;
      if (vs->count()) base.settle_time = vcfg.settle_time;
      if (vdt->count()) base.dt = vcfg.dt;
      if (vseed->count()) base.seed = vcfg.seed;
      if (vthr->count()) base.threads = vcfg.threads;
      return cmd_verify(base, ver_out_dir);
    }
    if (scn->parsed()) {
      fhn::ScanConfig base;
      if (!scn_scenario.empty()) {
        base = fhn::ScanConfig::from_json(load_json_file(scn_scenario));
      }
      if (scn_alpha != 0.0) base.alpha = scn_alpha;
      if (scn_beta != 0.0) base.beta = scn_beta;
      if (sc->count()) base.c = scfg.c;
      if (sd->count()) base.delta = scfg.delta;
      if (smin->count()) base.a_min = scfg.a_min;
      if (smax->count()) base.a_max = scfg.a_max;
      if (sstep->count()) base.a_step = scfg.a_step;
      if (sspan->count()) base.span = scfg.span;
      if (srep->count()) base.replicas = scfg.replicas;
      if (swin->count()) base.window = scfg.window;
      if (sset->count()) base.settle = scfg.settle;
      if (sdt->count()) base.dt = scfg.dt;
      if (sseed->count()) base.seed = scfg.seed;
      if (sthr->count()) base.threads = scfg.threads;
      return cmd_scan(base, scn_out_dir);
    }
  } catch (const fhn::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::domain_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
