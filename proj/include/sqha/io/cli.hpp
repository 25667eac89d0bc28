#pragma once

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sqha/case_studies.hpp"
#include "sqha/dynamics.hpp"
#include "sqha/error.hpp"
#include "sqha/io/config.hpp"
#include "sqha/io/csv.hpp"
#include "sqha/io/summary.hpp"
#include "sqha/noise.hpp"
#include "sqha/potentials_states.hpp"
#include "sqha/scales.hpp"

namespace sqha::io {

enum ExitCode : int { exit_ok = 0, exit_validation = 1, exit_numerical = 2 };

namespace detail {

/// Non-finite lengths (diverging lambda_q, lambda_c at zero temperature) are
/// written as the string "inf" since JSON has no infinity.
inline nlohmann::json number(double x) {
  if (std::isfinite(x)) return x;
  return x > 0 ? "inf" : (x < 0 ? "-inf" : "nan");
}

inline std::string fmt(double x) {
  std::ostringstream os;
  os.precision(5);
  os << x;
  return os.str();
}

inline double lambda_c_of(const ExperimentConfig& c, double mass) {
  if (c.lambda_c) return *c.lambda_c;
  return correlation_length(mass, c.theta);
}

struct Setup {
  MaterialParams material;
  HarmonicApprox approx;
  Grid grid;
  DensityField density;
  double center = 0.0;
};

inline PseudoGaussianFamily family_of(const ExperimentConfig& c) {
  PseudoGaussianFamily f;
  f.kind = c.family;
  const double w = c.core_width.value_or(1e-10);
  f.core_variance = w * w;
  f.lambda = c.lambda_scale.value_or(10.0 * w);
  f.g = c.g;
  f.h = c.h;
  f.center = c.center.value_or(0.0);
  f.validate();
  return f;
}

/// Grid and initial density for the [state] section, with the documented
/// per-state defaults for any grid key left unset.
inline Setup make_setup(const ExperimentConfig& c) {
  const MaterialParams p = resolve_material(c);
  const HarmonicApprox a = lj_harmonic(p, c.truncation);
  double lo = 0.0, hi = 0.0, center = 0.0;
  std::int64_t n_default = 801;
  std::optional<SquareWellState> well;
  std::optional<PseudoGaussianFamily> fam;
  double width = 0.0;
  switch (c.state) {
    case StateKind::gaussian:
      center = c.center.value_or(c.potential == PotentialKind::harmonic ? a.center : 0.0);
      width = c.width.value_or(0.5 / a.K0);
      lo = center - 16.0 * width;
      hi = center + 16.0 * width;
      break;
    case StateKind::harmonic_ground:
      center = c.center.value_or(a.center);
      lo = center - 6.0 / a.K0;
      hi = center + 6.0 / a.K0;
      break;
    case StateKind::pseudo_gaussian:
      fam = family_of(c);
      center = fam->center;
      lo = center - 400.0 * fam->lambda;
      hi = center + 400.0 * fam->lambda;
      n_default = 65537;
      break;
    case StateKind::square_well:
      well = square_well_solve(p, c.mass_convention);
      center = well->sigma;
      lo = well->sigma;
      hi = well->sigma + well->width + 8.0 / well->kappa;
      break;
  }
  const Grid grid(c.q_min.value_or(lo), c.q_max.value_or(hi),
                  static_cast<std::size_t>(c.n_points.value_or(n_default)));
  auto density = [&]() -> DensityField {
    switch (c.state) {
      case StateKind::gaussian: return gaussian_density(center, width, grid);
      case StateKind::harmonic_ground: {
        HarmonicApprox shifted = a;
        shifted.center = center;
        return harmonic_ground_density(shifted, grid);
      }
      case StateKind::pseudo_gaussian: return pseudo_gaussian_density(*fam, grid);
      case StateKind::square_well: return square_well_density(*well, grid, c.density_floor);
    }
    throw ValidationError("unknown state kind");
  }();
  return Setup{p, a, grid, std::move(density), center};
}

inline Field potential_of(const ExperimentConfig& c, const Setup& s) {
  if (c.potential == PotentialKind::free) return free_potential(s.grid);
  return harmonic_potential(s.approx.k, s.approx.center, -s.approx.well_depth, s.grid);
}

struct Outcome {
  nlohmann::json results;
  std::string line;
  int code = exit_ok;
};

inline nlohmann::json observables_json(const Observables& o) {
  return {{"time", o.time},         {"norm", o.norm},         {"mean_q", o.mean_q},
          {"variance", o.variance}, {"E_kin", o.kinetic},     {"E_pot", o.potential},
          {"E_qu", o.quantum}};
}

inline Outcome do_simulate(const ExperimentConfig& c, std::ostream& err) {
  const Setup s = make_setup(c);
  const Field v = potential_of(c, s);
  IntegratorConfig ic;
  ic.scheme = c.scheme;
  ic.cfl_safety = c.cfl_safety;
  ic.boundary = c.boundary;
  ic.density_floor = c.density_floor;
  const double auto_dt = c.scheme == Scheme::classical_limit
                             ? max_stable_dt(s.material.mass, s.grid.spacing(), c.cfl_safety)
                             : max_stable_dt(s.material.mass, v, c.cfl_safety);
  ic.dt = c.dt.value_or(auto_dt);
  const double t_end = c.t_end.value_or(1000.0 * ic.dt);
  std::optional<NoiseModel> noise;
  if (c.scheme == Scheme::stochastic_quantum) {
    noise = NoiseModel::make(s.material.mass, c.theta, c.mobility, c.conserving, c.lambda_c);
  }
  Field vel = Field::from_function(s.grid, [&](double) { return c.velocity; }, units::velocity);
  const HydroState init = make_state(s.density, s.material.mass, vel);
  const Trajectory t = run(init, v, s.material.mass, noise, ic, t_end,
                           static_cast<std::size_t>(c.output_stride), c.seed);
  if (!c.csv.empty()) write_outputs(t, c.csv);

  const Observables& last = t.snapshots.back().observables;
  Outcome o;
  o.results = {{"scheme", std::string(to_string(c.scheme))},
               {"dt", ic.dt},
               {"t_end", t_end},
               {"steps", t.steps_taken},
               {"snapshots", t.snapshots.size()},
               {"domain_too_small", t.domain_too_small},
               {"max_renormalization", t.max_renormalization},
               {"initial", observables_json(t.snapshots.front().observables)},
               {"final", observables_json(last)}};
  if (t.domain_too_small) err << "warning: domain too small: density reached the boundary band\n";
  if (t.failure) {
    err << "error: " << *t.failure << " (after " << t.steps_taken << " steps)\n";
    o.code = exit_numerical;
    return o;
  }
  o.line = "simulate: " + std::to_string(t.steps_taken) + " steps to t = " + fmt(last.time) +
           " s, norm = " + fmt(last.norm) + ", variance = " + fmt(last.variance) + " m^2";
  return o;
}

inline Outcome do_lambda_c(const ExperimentConfig& c) {
  const MaterialParams p = resolve_material(c);
  const double lc = correlation_length(p.mass, c.theta);
  Outcome o;
  o.results = {{"lambda_c", number(lc)}, {"mass", p.mass}, {"theta", c.theta}};
  o.line = "lambda_c = " + fmt(lc) + " m (mass " + fmt(p.mass) + " kg, theta " + fmt(c.theta) + " K)";
  return o;
}

struct NonlocalityResult {
  double lambda_c = 0.0;
  double lambda_q = 0.0;
  DecayClass tail;
  bool converges = false;
};

inline NonlocalityResult compute_lambda_q(const ExperimentConfig& c) {
  const Setup s = make_setup(c);
  NonlocalityResult r;
  r.lambda_c = lambda_c_of(c, s.material.mass);
  if (!std::isfinite(r.lambda_c)) {
    throw ValidationError("lambda_q needs a finite lambda_c: set noise.lambda_c or noise.theta > 0");
  }
  const QuantumForceProfile f = quantum_force(s.density, s.material.mass, s.center);
  const ConvergenceVerdict v = convergence_test(f);
  r.tail = v.tail;
  r.converges = v.converges;
  r.lambda_q = nonlocality_length(f, r.lambda_c, s.grid.q_max() - s.center);
  return r;
}

inline nlohmann::json tail_json(const DecayClass& d) {
  return {{"label", std::string(to_string(d.label))},
          {"fitted_exponent", number(d.fitted_exponent)},
          {"near_boundary", d.near_boundary},
          {"points_used", d.points_used}};
}

inline Outcome do_lambda_q(const ExperimentConfig& c) {
  const NonlocalityResult r = compute_lambda_q(c);
  Outcome o;
  o.results = {{"lambda_c", r.lambda_c},
               {"lambda_q", number(r.lambda_q)},
               {"converges", r.converges},
               {"tail", tail_json(r.tail)}};
  o.line = "lambda_q = " + fmt(r.lambda_q) + " m at lambda_c = " + fmt(r.lambda_c) + " m (tail " +
           std::string(to_string(r.tail.label)) + ")";
  return o;
}

inline Outcome do_classify(const ExperimentConfig& c) {
  if (!c.delta_L) throw ValidationError("classify needs experiment.delta_L");
  std::optional<NonlocalityResult> nl;
  double lq = 0.0, lc = 0.0;
  if (c.lambda_q) {
    lq = *c.lambda_q;
    lc = lambda_c_of(c, resolve_material(c).mass);
  } else {
    nl = compute_lambda_q(c);
    lq = nl->lambda_q;
    lc = nl->lambda_c;
  }
  const ScaleReport rep = make_scale_report(
      *c.delta_L, lc, lq, 0.1, nl ? std::optional<DecayClass>(nl->tail) : std::nullopt);
  Outcome o;
  o.results = {{"delta_L", rep.delta_L},
               {"lambda_c", number(rep.lambda_c)},
               {"lambda_q", number(rep.lambda_q)},
               {"regime", std::string(to_string(rep.regime))},
               {"near_threshold", rep.near_threshold},
               {"ratio_threshold", rep.ratio_threshold}};
  if (rep.decay) o.results["tail"] = tail_json(*rep.decay);
  o.line = "regime = " + std::string(to_string(rep.regime)) +
           (rep.near_threshold ? " (near threshold)" : "") + " for delta_L = " + fmt(rep.delta_L) +
           " m, lambda_c = " + fmt(rep.lambda_c) + " m, lambda_q = " + fmt(rep.lambda_q) + " m";
  return o;
}

inline Outcome do_lindemann(const ExperimentConfig& c) {
  const MaterialParams p = resolve_material(c);
  const LindemannReport r =
      lindemann(p, static_cast<std::size_t>(c.n_points.value_or(4001)), c.truncation);
  Outcome o;
  o.results = {{"lambda_q_over_r0", r.lambda_q_over_r0},
               {"delta_over_r0", r.delta_over_r0},
               {"within_empirical_band", r.within_empirical_band},
               {"empirical_band", {lindemann_band_low, lindemann_band_high}},
               {"lambda_q", r.lambda_q},
               {"delta", r.delta},
               {"r0", r.r0},
               {"lambda_c", r.lambda_c},
               {"grid_resolution", r.grid_resolution}};
  o.line = "lambda_q / r0 = " + fmt(r.lambda_q_over_r0) + " (delta / r0 = " +
           fmt(r.delta_over_r0) + ", empirical band [0.20, 0.25]: " +
           (r.within_empirical_band ? "inside" : "outside") + ")";
  return o;
}

inline Outcome do_helium(const ExperimentConfig& c) {
  const MaterialParams p = resolve_material(c);
  const LambdaPointReport lp = helium_lambda(p);
  const HeliumStateReport hs = helium_state_check(p, c.mass_convention);
  Outcome o;
  o.results = {
      {"theta_star", lp.theta_star},
      {"paper_value", lp.paper_value},
      {"lambda_c_at_paper_theta", lp.lambda_c_at_paper_theta},
      {"two_delta", lp.two_delta},
      {"forward_relative_error", lp.forward_relative_error},
      {"note",
       "theta_star solves lambda_c(theta) = 2 Delta with CODATA constants; the published 2.17 K "
       "is not reproduced exactly because the published constants disagree at the ~15% level"},
      {"bound_state",
       {{"E0_over_kB", hs.E0_over_kB},
        {"paper_E0_over_kB", hs.paper_E0_over_kB},
        {"E0_within_band", hs.E0_within_band},
        {"mass_convention", hs.mass_convention == MassConvention::full ? "full" : "reduced"},
        {"K0", hs.state.K0},
        {"kappa", hs.state.kappa},
        {"matching_residual", hs.state.matching_residual},
        {"max_inner_force", hs.max_inner_force},
        {"harmonic_core_force", hs.harmonic_core_force},
        {"inner_force_ratio", hs.inner_force_ratio},
        {"lambda_q_over_r0", hs.lambda_q_over_r0},
        {"two_delta_over_r0", hs.two_delta_over_r0},
        {"paper_two_delta_over_r0", hs.paper_two_delta_over_r0},
        {"ordering_holds", hs.ordering_holds},
        {"ordering_holds_paper", hs.ordering_holds_paper}}}};
  o.line = "theta* = " + fmt(lp.theta_star) + " K (published 2.17 K), E0 = " +
           fmt(hs.E0_over_kB) + " k_B, 2 Delta / r0 = " + fmt(hs.two_delta_over_r0);
  return o;
}

inline Outcome do_noise_audit(const ExperimentConfig& c) {
  const MaterialParams p = resolve_material(c);
  if (!(c.theta > 0.0)) throw ValidationError("noise-audit needs noise.theta > 0");
  const NoiseModel m = NoiseModel::make(p.mass, c.theta, c.mobility, c.conserving, c.lambda_c);
  const double lc = m.lambda_c;
  const auto n = static_cast<std::size_t>(c.n_points.value_or(4096));
  const double lo = c.q_min.value_or(0.0);
  const double hi = c.q_max.value_or(lo + static_cast<double>(n - 1) * 0.25 * lc);
  const Grid g(lo, hi, n);
  const auto cells = [&](double lag) {
    return static_cast<std::size_t>(std::llround(lag / g.spacing()));
  };
  const std::vector<std::size_t> lags{0, cells(lc), cells(2.0 * lc)};
  CorrelatedFieldSampler sampler(m, g);
  RandomStream stream(c.seed);
  const CovarianceEstimate est =
      estimate_covariance(sampler, g, stream, static_cast<std::size_t>(c.samples), lags);
  Outcome o;
  nlohmann::json rows = nlohmann::json::array();
  double worst = 0.0;
  for (std::size_t k = 0; k < lags.size(); ++k) {
    const double rel = std::abs(est.empirical[k] / est.target[k] - 1.0);
    worst = std::max(worst, rel);
    rows.push_back({{"lag", est.lags[k]},
                    {"empirical", est.empirical[k]},
                    {"target", est.target[k]},
                    {"relative_error", rel}});
  }
  o.results = {{"lambda_c", lc},
               {"amplitude", m.amplitude()},
               {"samples", est.samples},
               {"lags", rows},
               {"max_relative_error", worst}};
  o.line = "noise-audit: " + std::to_string(est.samples) + " samples, max covariance error " +
           fmt(100.0 * worst) + "% at lambda_c = " + fmt(lc) + " m";
  return o;
}

inline Outcome dispatch(const ExperimentConfig& c, std::ostream& err) {
  switch (c.kind) {
    case ExperimentKind::simulate: return do_simulate(c, err);
    case ExperimentKind::lambda_c: return do_lambda_c(c);
    case ExperimentKind::lambda_q: return do_lambda_q(c);
    case ExperimentKind::classify: return do_classify(c);
    case ExperimentKind::case_lindemann: return do_lindemann(c);
    case ExperimentKind::case_helium: return do_helium(c);
    case ExperimentKind::noise_audit: return do_noise_audit(c);
  }
  throw ValidationError("unknown experiment kind");
}

inline std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot read config '" + path + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

}  // namespace detail

/// Entry point of the command-line tool. Returns the process exit status:
/// 0 ok, 1 validation error, 2 numerical failure.
inline int run_command(int argc, const char* const* argv, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
  CLI::App app{"Stochastic quantum hydrodynamic analysis tool", "sqha"};
  app.set_version_flag("--version", std::string(version));
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  // Flag name -> config key; flags are applied after the file and --set.
  std::vector<std::pair<std::string, std::string>> flag_keys{
      {"--mass", "material.mass"},        {"--theta", "noise.theta"},
      {"--mu", "noise.mobility"},         {"--lambda-c", "noise.lambda_c"},
      {"--samples", "noise.samples"},     {"--seed", "experiment.seed"},
      {"--delta-L", "experiment.delta_L"}, {"--lambda-q", "experiment.lambda_q"},
      {"--dt", "integrator.dt"},          {"--t-end", "integrator.t_end"},
      {"--scheme", "integrator.scheme"},  {"--n-points", "grid.n_points"},
      {"--state", "state.kind"},          {"--potential", "experiment.potential"},
      {"--csv", "output.csv"},            {"--json", "output.json"}};
  std::vector<std::string> flag_values(flag_keys.size());

  ExperimentKind kind = ExperimentKind::simulate;
  auto leaf = [&](CLI::App* sub, ExperimentKind k) {
    sub->add_option("--config", config_path, "Experiment config file");
    sub->add_option("--set", sets, "Override: section.key=value (repeatable)");
    for (std::size_t i = 0; i < flag_keys.size(); ++i) {
      sub->add_option(flag_keys[i].first, flag_values[i], "Sets " + flag_keys[i].second);
    }
    sub->callback([&kind, k] { kind = k; });
  };
  leaf(app.add_subcommand("simulate", "Integrate the hydrodynamic equations"),
       ExperimentKind::simulate);
  leaf(app.add_subcommand("lambda-c", "Quantum correlation length at temperature theta"),
       ExperimentKind::lambda_c);
  leaf(app.add_subcommand("lambda-q", "Quantum non-locality length of a state"),
       ExperimentKind::lambda_q);
  leaf(app.add_subcommand("classify", "Dynamical regime from delta_L, lambda_c, lambda_q"),
       ExperimentKind::classify);
  leaf(app.add_subcommand("noise-audit", "Empirical covariance of the sampled noise"),
       ExperimentKind::noise_audit);
  CLI::App* cases = app.add_subcommand("case", "Case studies");
  cases->require_subcommand(1);
  leaf(cases->add_subcommand("lindemann", "Non-locality length of the L-J harmonic state"),
       ExperimentKind::case_lindemann);
  leaf(cases->add_subcommand("helium", "Helium-4 lambda point and bound state"),
       ExperimentKind::case_helium);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return exit_ok;
    }
    err << "error: " << e.what() << '\n';
    return exit_validation;
  }

  ExperimentConfig cfg;
  try {
    if (!config_path.empty()) cfg = parse_config(detail::read_text(config_path));
    cfg.kind = kind;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ValidationError("--set expects section.key=value, got '" + s + "'");
      set_value(cfg, detail::trim(std::string_view(s).substr(0, eq)),
                std::string_view(s).substr(eq + 1));
    }
    for (std::size_t i = 0; i < flag_keys.size(); ++i) {
      if (!flag_values[i].empty()) set_value(cfg, flag_keys[i].second, flag_values[i]);
    }
    validate(cfg);
    detail::Outcome res = detail::dispatch(cfg, err);
    if (res.code != exit_ok) return res.code;
    if (!cfg.json.empty()) write_outputs(make_summary(cfg, res.results), cfg.json);
    out << res.line << '\n';
    return exit_ok;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return exit_validation;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return exit_numerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_validation;
  }
}

}  // namespace sqha::io
