#pragma once

#include <algorithm>
#include <complex>
#include <limits>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sqha/constants.hpp"
#include "sqha/density.hpp"
#include "sqha/error.hpp"
#include "sqha/field.hpp"
#include "sqha/noise.hpp"
#include "sqha/numerics.hpp"
#include "sqha/quantum_potential.hpp"

namespace sqha {

enum class Scheme { deterministic_quantum, stochastic_quantum, classical_limit };
enum class BoundaryCondition { zero_flux, periodic };

inline std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::deterministic_quantum: return "deterministic_quantum";
    case Scheme::stochastic_quantum: return "stochastic_quantum";
    case Scheme::classical_limit: return "classical_limit";
  }
  return "unknown";
}

inline std::string_view to_string(BoundaryCondition b) {
  return b == BoundaryCondition::periodic ? "periodic" : "zero_flux";
}

inline Boundary stencil_boundary(BoundaryCondition b) {
  return b == BoundaryCondition::periodic ? Boundary::periodic : Boundary::one_sided;
}

struct IntegratorConfig {
  double dt = 0.0;  // s
  Scheme scheme = Scheme::deterministic_quantum;
  double cfl_safety = 0.5;
  BoundaryCondition boundary = BoundaryCondition::zero_flux;
  /// Relative floor applied after noise kicks (fraction of the peak density).
  double density_floor = 1e-12;
};

/// Quantum dispersion bound: dt <= cfl * m dq^2 / hbar.
inline double max_stable_dt(double mass, double spacing, double cfl_safety) {
  return cfl_safety * mass * spacing * spacing / codata.hbar;
}

/// Phase-rotation bound of the quantum step. The step shifts V by a
/// reference inside its range, so |V - V_ref| dt / hbar <= 0.8 cfl; with the
/// dispersion's 2 cfl the rotation stays inside RK4's |theta| < 2 sqrt 2.
inline double potential_phase_dt(const Field& potential, double cfl_safety) {
  const auto [lo, hi] = std::minmax_element(potential.values().begin(), potential.values().end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) return std::numeric_limits<double>::infinity();
  return 0.8 * cfl_safety * codata.hbar / range;
}

/// Largest quantum step allowed by both the dispersion and the potential bound.
inline double max_stable_dt(double mass, const Field& potential, double cfl_safety) {
  return std::min(max_stable_dt(mass, potential.grid().spacing(), cfl_safety),
                  potential_phase_dt(potential, cfl_safety));
}

inline void check_config(const IntegratorConfig& cfg, double mass, const Grid& grid) {
  if (!(mass > 0.0)) throw ValidationError("mass must be positive");
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw ValidationError("dt must be positive");
  if (!(cfg.cfl_safety > 0.0 && cfg.cfl_safety <= 1.0)) {
    throw ValidationError("cfl_safety must lie in (0, 1]");
  }
  if (!(cfg.density_floor > 0.0 && cfg.density_floor < 1.0)) {
    throw ValidationError("density_floor must lie in (0, 1)");
  }
  const double limit = max_stable_dt(mass, grid.spacing(), cfg.cfl_safety);
  if (cfg.dt > limit) {
    std::ostringstream os;
    os << "CFL violation: dt = " << cfg.dt << " s exceeds cfl_safety * m dq^2 / hbar = " << limit
       << " s";
    throw NumericalError(os.str());
  }
}

/// Density, velocity q_dot = p/m and accumulated action S. Quantum steps read
/// the phase from S and return a velocity consistent with it.
struct HydroState {
  double time = 0.0;
  DensityField density;
  Field velocity;
  Field action;
};

/// Builds a state from a density and optional velocity; the action starts as
/// S(q) = m * integral of v from q_min, so that S' = m v.
inline HydroState make_state(DensityField density, double mass,
                             std::optional<Field> velocity = std::nullopt, double time = 0.0) {
  const Grid g = density.grid();
  Field v = velocity ? *velocity : Field::zeros(g, units::velocity);
  if (!(v.grid() == g)) throw ValidationError("velocity grid differs from density grid");
  if (!(mass > 0.0)) throw ValidationError("mass must be positive");
  std::vector<double> s(g.size(), 0.0);
  for (std::size_t i = 1; i < s.size(); ++i) {
    s[i] = s[i - 1] + 0.5 * mass * (v[i] + v[i - 1]) * g.spacing();
  }
  return HydroState{time, std::move(density), v.with_unit(units::velocity),
                    Field(g, std::move(s), units::action)};
}

/// Same density with v -> -v and S -> -S.
inline HydroState reversed(const HydroState& s) {
  return HydroState{s.time, s.density, s.velocity.scaled(-1.0), s.action.scaled(-1.0)};
}

/// Difference between the quantum forces of a perturbed and a reference
/// density. The classical integrator drops it (neglected = true).
struct ClassicalResidue {
  Field delta_force;
  bool neglected = false;
};

inline ClassicalResidue classical_residue(const DensityField& perturbed,
                                          const DensityField& reference, double mass,
                                          Boundary b = Boundary::one_sided) {
  const Field d = quantum_potential(perturbed, mass, b) - quantum_potential(reference, mass, b);
  return ClassicalResidue{derivative(d, 1, b).with_unit(units::force), false};
}

struct StepDiagnostics {
  /// |norm after floor / norm before - 1| from the floor-and-renormalise pass.
  double renormalization = 0.0;
  std::size_t floored_points = 0;
};

namespace detail {

struct HydroVars {
  std::vector<double> u;  // ln n
  std::vector<double> v;
  std::vector<double> s;
};

/// Right-hand side of
///   d_t n = -d_q (n v),  d_t v = -v d_q v - d_q (V + V_qu) / m,
///   d_t S = -(m v^2 / 2 + V + V_qu)
/// evaluated on u = ln n, where continuity reads d_t u = -v d_q u - d_q v.
/// All stencils are central on an array padded with two ghost cells per side:
/// wrapped for periodic domains, extrapolated otherwise (quadratic in u and V,
/// linear in v). The flux form exp(u_j - u_i) v_j is avoided because it
/// amplifies errors at inflow edges where u falls steeply.
class HydroRhs {
 public:
  static constexpr std::size_t ghosts = 2;

  HydroRhs(const Field& potential, double mass, BoundaryCondition bc, bool quantum)
      : mass_(mass), h_(potential.grid().spacing()), bc_(bc), quantum_(quantum) {
    const std::size_t n = potential.size();
    if (n < 2 * ghosts + 2) throw ValidationError("grid too small for the integrator");
    pot_.resize(n + 2 * ghosts);
    for (std::size_t i = 0; i < n; ++i) pot_[i + ghosts] = potential[i];
    fill_ghosts(pot_, 2);
    u_.resize(n + 2 * ghosts);
    v_.resize(n + 2 * ghosts);
    total_.resize(n + 2 * ghosts);
  }

  void operator()(const HydroVars& y, HydroVars& dy) {
    const std::size_t n = y.u.size();
    const std::size_t g = ghosts;
    std::copy(y.u.begin(), y.u.end(), u_.begin() + g);
    std::copy(y.v.begin(), y.v.end(), v_.begin() + g);
    fill_ghosts(u_, 2);
    fill_ghosts(v_, 1);
    const double pref = -codata.hbar * codata.hbar / (2.0 * mass_);
    const double invh2 = 1.0 / (h_ * h_);
    const double inv2h = 0.5 / h_;
    for (std::size_t j = 1; j + 1 < u_.size(); ++j) {
      double vq = 0.0;
      if (quantum_) {
        vq = pref * (std::expm1(0.5 * (u_[j + 1] - u_[j])) + std::expm1(0.5 * (u_[j - 1] - u_[j]))) *
             invh2;
      }
      total_[j] = pot_[j] + vq;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = i + g;
      const double dv = (v_[j + 1] - v_[j - 1]) * inv2h;
      const double dp = (total_[j + 1] - total_[j - 1]) * inv2h;
      dy.u[i] = -(v_[j] * (u_[j + 1] - u_[j - 1]) * inv2h + dv);
      dy.v[i] = -v_[j] * dv - dp / mass_;
      dy.s[i] = -(0.5 * mass_ * v_[j] * v_[j] + total_[j]);
    }
  }

 private:
  // order 2: quadratic extrapolation, order 1: linear.
  void fill_ghosts(std::vector<double>& a, int order) const {
    const std::size_t g = ghosts;
    const std::size_t n = a.size() - 2 * g;
    if (bc_ == BoundaryCondition::periodic) {
      for (std::size_t k = 1; k <= g; ++k) {
        a[g - k] = a[g + n - k];
        a[g + n - 1 + k] = a[g + k - 1];
      }
      return;
    }
    for (std::size_t k = 1; k <= g; ++k) {
      const std::size_t lo = g - k;
      const std::size_t hi = g + n - 1 + k;
      if (order == 2) {
        a[lo] = 3.0 * a[lo + 1] - 3.0 * a[lo + 2] + a[lo + 3];
        a[hi] = 3.0 * a[hi - 1] - 3.0 * a[hi - 2] + a[hi - 3];
      } else {
        a[lo] = 2.0 * a[lo + 1] - a[lo + 2];
        a[hi] = 2.0 * a[hi - 1] - a[hi - 2];
      }
    }
  }

  double mass_;
  double h_;
  BoundaryCondition bc_;
  bool quantum_;
  std::vector<double> pot_, u_, v_, total_;
};

inline void axpy(const HydroVars& y, const HydroVars& k, double a, HydroVars& out) {
  for (std::size_t i = 0; i < y.u.size(); ++i) {
    out.u[i] = y.u[i] + a * k.u[i];
    out.v[i] = y.v[i] + a * k.v[i];
    out.s[i] = y.s[i] + a * k.s[i];
  }
}

inline HydroVars rk4(const HydroVars& y, double dt, HydroRhs& rhs) {
  const std::size_t n = y.u.size();
  auto blank = [n] { return HydroVars{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)}; };
  HydroVars k1 = blank(), k2 = blank(), k3 = blank(), k4 = blank(), tmp = blank();
  rhs(y, k1);
  axpy(y, k1, 0.5 * dt, tmp);
  rhs(tmp, k2);
  axpy(y, k2, 0.5 * dt, tmp);
  rhs(tmp, k3);
  axpy(y, k3, dt, tmp);
  rhs(tmp, k4);
  HydroVars out = blank();
  const double w = dt / 6.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.u[i] = y.u[i] + w * (k1.u[i] + 2.0 * k2.u[i] + 2.0 * k3.u[i] + k4.u[i]);
    out.v[i] = y.v[i] + w * (k1.v[i] + 2.0 * k2.v[i] + 2.0 * k3.v[i] + k4.v[i]);
    out.s[i] = y.s[i] + w * (k1.s[i] + 2.0 * k2.s[i] + 2.0 * k3.s[i] + k4.s[i]);
  }
  return out;
}

inline void require_finite(const HydroVars& y) {
  for (std::size_t i = 0; i < y.u.size(); ++i) {
    if (!std::isfinite(y.u[i]) || !std::isfinite(y.v[i]) || !std::isfinite(y.s[i])) {
      throw NumericalError("step rejected: non-finite density or velocity at index " +
                           std::to_string(i));
    }
  }
}

inline void check_step_inputs(const HydroState& state, const Field& potential, double mass,
                              const IntegratorConfig& cfg) {
  const Grid& g = state.density.grid();
  if (!(potential.grid() == g)) throw ValidationError("potential grid differs from state grid");
  if (!(state.velocity.grid() == g)) throw ValidationError("velocity grid differs from state grid");
  if (!(state.action.grid() == g)) throw ValidationError("action grid differs from state grid");
  check_config(cfg, mass, g);
}

/// Classical limit: hydrodynamic RK4 with the quantum potential dropped.
inline HydroState advance_classical(const HydroState& state, const Field& potential, double mass,
                                    const IntegratorConfig& cfg) {
  check_step_inputs(state, potential, mass, cfg);
  const Grid& g = state.density.grid();
  HydroVars y{std::vector<double>(state.density.log_values().begin(),
                                  state.density.log_values().end()),
              state.velocity.data(), state.action.data()};
  HydroRhs rhs(potential, mass, cfg.boundary, false);
  HydroVars next = rk4(y, cfg.dt, rhs);
  require_finite(next);
  return HydroState{state.time + cfg.dt, DensityField::from_log(g, std::move(next.u)),
                    Field(g, std::move(next.v), units::velocity),
                    Field(g, std::move(next.s), units::action)};
}

using cvec = std::vector<std::complex<double>>;

/// i hbar psi_t = -(hbar^2 / 2m) psi'' + V psi with a hard wall (psi = 0 one
/// cell outside the grid) for zero flux, or wrap-around for periodic grids.
inline void schroedinger_rhs(const cvec& psi, const std::vector<double>& pot, double mass,
                             double h, bool periodic, cvec& out) {
  const std::size_t n = psi.size();
  const double c = codata.hbar / (2.0 * mass * h * h);
  const std::complex<double> minus_i(0.0, -1.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::complex<double> left = i > 0 ? psi[i - 1] : (periodic ? psi[n - 1] : 0.0);
    std::complex<double> right = i + 1 < n ? psi[i + 1] : (periodic ? psi[0] : 0.0);
    const std::complex<double> h_psi =
        -c * (right - 2.0 * psi[i] + left) + (pot[i] / codata.hbar) * psi[i];
    out[i] = minus_i * h_psi;
  }
}

/// Quantum step. The hydrodynamic state (n, S) is mapped to
/// psi = sqrt(n) exp(i S / hbar), advanced by RK4 and mapped back; the
/// velocity is refreshed as (hbar / m) Im(psi' / psi). This is the same
/// continuity + momentum system with V_qu = -(hbar^2 / 2m) (sqrt n)'' / sqrt n,
/// but stays well defined where n is many decades below its peak.
inline HydroState advance_quantum(const HydroState& state, const Field& potential, double mass,
                                  const IntegratorConfig& cfg) {
  check_step_inputs(state, potential, mass, cfg);
  const Grid& g = state.density.grid();
  const std::size_t n = g.size();
  const bool periodic = cfg.boundary == BoundaryCondition::periodic;
  const double h = g.spacing();
  const double top = state.density.peak_log();
  const double hbar = codata.hbar;

  const double phase_limit = potential_phase_dt(potential, cfg.cfl_safety);
  if (cfg.dt > phase_limit) {
    std::ostringstream os;
    os << "CFL violation: dt = " << cfg.dt
       << " s exceeds 0.8 cfl_safety * hbar / (V_max - V_min) = " << phase_limit << " s";
    throw NumericalError(os.str());
  }

  cvec psi(n);
  for (std::size_t i = 0; i < n; ++i) {
    psi[i] = std::polar(std::exp(0.5 * (state.density.log_value(i) - top)), state.action[i] / hbar);
  }
  // A constant shift only rotates the global phase; it is put back into S.
  // Referencing the density-weighted mean keeps the rotation small where the
  // mass is.
  double wsum = 0.0, vsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = std::norm(psi[i]);
    wsum += w;
    vsum += w * potential[i];
  }
  const double v_ref = vsum / wsum;
  std::vector<double> pot(n);
  for (std::size_t i = 0; i < n; ++i) pot[i] = potential[i] - v_ref;
  cvec k1(n), k2(n), k3(n), k4(n), tmp(n);
  const double dt = cfg.dt;
  auto stage = [&](const cvec& k, double a) {
    for (std::size_t i = 0; i < n; ++i) tmp[i] = psi[i] + a * k[i];
  };
  schroedinger_rhs(psi, pot, mass, h, periodic, k1);
  stage(k1, 0.5 * dt);
  schroedinger_rhs(tmp, pot, mass, h, periodic, k2);
  stage(k2, 0.5 * dt);
  schroedinger_rhs(tmp, pot, mass, h, periodic, k3);
  stage(k3, dt);
  schroedinger_rhs(tmp, pot, mass, h, periodic, k4);
  cvec next(n);
  for (std::size_t i = 0; i < n; ++i) {
    next[i] = psi[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }

  std::vector<double> u(n), v(n), s(n);
  constexpr double tiny = std::numeric_limits<double>::min();
  for (std::size_t i = 0; i < n; ++i) {
    const double rho = std::norm(next[i]);
    if (!std::isfinite(rho)) {
      throw NumericalError("step rejected: non-finite density at index " + std::to_string(i));
    }
    u[i] = top + std::log(std::max(rho, tiny));
    s[i] = state.action[i] + hbar * std::arg(next[i] * std::conj(psi[i])) - v_ref * dt;
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::complex<double> left = i > 0 ? next[i - 1] : (periodic ? next[n - 1] : 0.0);
    std::complex<double> right = i + 1 < n ? next[i + 1] : (periodic ? next[0] : 0.0);
    const double rho = std::max(std::norm(next[i]), tiny);
    v[i] = hbar / mass * std::imag(std::conj(next[i]) * (right - left)) / (2.0 * h * rho);
  }
  return HydroState{state.time + dt, DensityField::from_log(g, std::move(u)),
                    Field(g, std::move(v), units::velocity), Field(g, std::move(s), units::action)};
}

}  // namespace detail

/// One RK4 step of the deterministic quantum hydrodynamic system.
inline HydroState step_deterministic(const HydroState& state, const Field& potential, double mass,
                                     const IntegratorConfig& cfg) {
  return detail::advance_quantum(state, potential, mass, cfg);
}

/// Deterministic step plus an Euler-Maruyama density kick eta * sqrt(dt);
/// the density is then floored and, for conserving noise, renormalised to its
/// pre-kick norm. Theta = 0 reduces exactly to step_deterministic.
inline HydroState step_stochastic(const HydroState& state, const Field& potential, double mass,
                                  const CorrelatedFieldSampler& noise, RandomStream& stream,
                                  const IntegratorConfig& cfg, StepDiagnostics* diag = nullptr) {
  HydroState next = step_deterministic(state, potential, mass, cfg);
  if (noise.model().amplitude() == 0.0) return next;
  const Grid& g = next.density.grid();
  const Boundary b = stencil_boundary(cfg.boundary);
  const Field eta = noise.sample(stream);
  const double before = next.density.norm(b);
  std::vector<double> n(g.size());
  const double sq = std::sqrt(cfg.dt);
  double peak = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    n[i] = next.density.value(i) + eta[i] * sq;
    peak = std::max(peak, n[i]);
  }
  if (!(peak > 0.0)) throw NumericalError("step rejected: noise kick removed all density");
  const double floor = cfg.density_floor * peak;
  std::size_t floored = 0;
  for (double& x : n) {
    if (x < floor) {
      x = floor;
      ++floored;
    }
  }
  DensityField kicked = DensityField::from_log(g, [&] {
    std::vector<double> u(n.size());
    for (std::size_t i = 0; i < n.size(); ++i) u[i] = std::log(n[i]);
    return u;
  }());
  double renorm = 0.0;
  if (noise.model().conserving) {
    const double after = kicked.norm(b);
    renorm = std::abs(after / before - 1.0);
    kicked = kicked.scaled(before / after);
  }
  if (diag) {
    diag->renormalization = renorm;
    diag->floored_points = floored;
  }
  next.density = std::move(kicked);
  return next;
}

/// Classical limit: momentum driven by -dV/dq only, the quantum residue is
/// neglected; the density is carried by the classical velocity.
inline HydroState step_classical(const HydroState& state, const Field& potential, double mass,
                                 const IntegratorConfig& cfg) {
  return detail::advance_classical(state, potential, mass, cfg);
}

struct Observables {
  double time = 0.0;
  double norm = 0.0;
  double mean_q = 0.0;
  double variance = 0.0;
  double kinetic = 0.0;    // J
  double potential = 0.0;  // J
  double quantum = 0.0;    // J

  double total_energy() const { return kinetic + potential + quantum; }
};

inline Observables observe(const HydroState& s, const Field& potential, double mass,
                           Boundary b = Boundary::one_sided) {
  const Grid& g = s.density.grid();
  const Field n = s.density.density();
  const Field vq = quantum_potential(s.density, mass, b);
  const std::size_t sz = g.size();
  std::vector<double> w(sz);
  auto moment = [&](auto&& f) {
    for (std::size_t i = 0; i < sz; ++i) w[i] = n[i] * f(i);
    return kernels::integrate(w, g.spacing(), b);
  };
  Observables o;
  o.time = s.time;
  o.norm = moment([](std::size_t) { return 1.0; });
  o.mean_q = moment([&](std::size_t i) { return g[i]; }) / o.norm;
  o.variance = moment([&](std::size_t i) {
                 const double d = g[i] - o.mean_q;
                 return d * d;
               }) / o.norm;
  o.kinetic = moment([&](std::size_t i) { return 0.5 * mass * s.velocity[i] * s.velocity[i]; });
  o.potential = moment([&](std::size_t i) { return potential[i]; });
  o.quantum = moment([&](std::size_t i) { return vq[i]; });
  return o;
}

struct Snapshot {
  HydroState state;
  Observables observables;
};

struct Trajectory {
  std::vector<Snapshot> snapshots;
  std::size_t steps_taken = 0;
  /// Set when a step was rejected; snapshots hold the run up to that point.
  std::optional<std::string> failure;
  /// Density within 5 cells of an edge exceeded 1e-6 of the peak.
  bool domain_too_small = false;
  double max_renormalization = 0.0;
};

namespace detail {
inline bool boundary_mass_exceeded(const DensityField& d) {
  const std::size_t n = d.size();
  const std::size_t band = std::min<std::size_t>(5, n / 2);
  const double limit = d.peak_log() + std::log(1e-6);
  for (std::size_t i = 0; i < band; ++i) {
    if (d.log_value(i) > limit || d.log_value(n - 1 - i) > limit) return true;
  }
  return false;
}
}  // namespace detail

/// Steps from `initial` to t_end, recording a snapshot every output_stride
/// steps plus the final state. The last step is shortened to land on t_end.
inline Trajectory run(const HydroState& initial, const Field& potential, double mass,
                      const std::optional<NoiseModel>& noise, const IntegratorConfig& cfg,
                      double t_end, std::size_t output_stride, std::uint64_t seed = 0) {
  const Grid& g = initial.density.grid();
  check_config(cfg, mass, g);
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw ValidationError("t_end must be >= 0");
  if (output_stride == 0) throw ValidationError("output_stride must be positive");
  if (cfg.scheme == Scheme::stochastic_quantum && !noise) {
    throw ValidationError("stochastic scheme needs a noise model");
  }
  if (cfg.scheme != Scheme::classical_limit && cfg.dt > potential_phase_dt(potential, cfg.cfl_safety)) {
    std::ostringstream os;
    os << "CFL violation: dt = " << cfg.dt << " s exceeds 0.8 cfl_safety * hbar / (V_max - V_min) = "
       << potential_phase_dt(potential, cfg.cfl_safety) << " s";
    throw NumericalError(os.str());
  }
  const Boundary b = stencil_boundary(cfg.boundary);
  std::optional<CorrelatedFieldSampler> sampler;
  if (cfg.scheme == Scheme::stochastic_quantum) sampler.emplace(*noise, g);
  RandomStream stream(seed);

  Trajectory traj;
  traj.snapshots.push_back({initial, observe(initial, potential, mass, b)});
  traj.domain_too_small = detail::boundary_mass_exceeded(initial.density);

  HydroState state = initial;
  const double t0 = initial.time;
  const auto n_steps = static_cast<std::size_t>(std::ceil(t_end / cfg.dt - 1e-9));
  for (std::size_t k = 0; k < n_steps; ++k) {
    IntegratorConfig step_cfg = cfg;
    const double remaining = (t0 + t_end) - state.time;
    step_cfg.dt = std::min(cfg.dt, remaining);
    if (step_cfg.dt <= 0.0) break;
    try {
      switch (cfg.scheme) {
        case Scheme::deterministic_quantum:
          state = step_deterministic(state, potential, mass, step_cfg);
          break;
        case Scheme::stochastic_quantum: {
          StepDiagnostics diag;
          state = step_stochastic(state, potential, mass, *sampler, stream, step_cfg, &diag);
          traj.max_renormalization = std::max(traj.max_renormalization, diag.renormalization);
          break;
        }
        case Scheme::classical_limit:
          state = step_classical(state, potential, mass, step_cfg);
          break;
      }
    } catch (const NumericalError& e) {
      traj.failure = e.what();
      break;
    }
    ++traj.steps_taken;
    if (detail::boundary_mass_exceeded(state.density)) traj.domain_too_small = true;
    if ((k + 1) % output_stride == 0 || k + 1 == n_steps) {
      traj.snapshots.push_back({state, observe(state, potential, mass, b)});
    }
  }
  if (traj.failure && (traj.snapshots.back().state.time != state.time)) {
    traj.snapshots.push_back({state, observe(state, potential, mass, b)});
  }
  return traj;
}

}  // namespace sqha
