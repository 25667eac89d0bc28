#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sqha/constants.hpp"
#include "sqha/density.hpp"
#include "sqha/error.hpp"
#include "sqha/field.hpp"
#include "sqha/numerics.hpp"

namespace sqha {

namespace kernels {

/// Weight of the log-derivative estimate from the two half log-density
/// steps to the neighbours. It rises from 0 to 1 as the largest step grows
/// from 0.25 to 1, but only where w is locally close to linear: near a node
/// (|second difference| comparable to the first) the weight stays 0.
inline double steepness_weight(double dp, double dm) {
  auto smoothstep = [](double t) {
    t = std::clamp(t, 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
  };
  const double step = std::max(std::abs(dp), std::abs(dm));
  const double slope = 0.5 * std::abs(dp - dm);
  const double bend = std::abs(dp + dm);
  const double curvature_ratio = slope > 0.0 ? bend / slope : 1.0;
  return smoothstep((step - 0.25) / 0.75) * (1.0 - smoothstep((curvature_ratio - 0.02) / 0.08));
}

/// (d^2 sqrt(n) / dq^2) / sqrt(n) from u = ln n, with w = u / 2.
///
/// Where w changes slowly between cells this is the plain second-difference
/// stencil on sqrt(n) divided by sqrt(n), each ratio sqrt(n_j) / sqrt(n_i)
/// formed as exp(w_j - w_i) so nothing underflows; it keeps sine-like states
/// (nodes, flat curvature) exact to rounding. On steep smooth tails, where
/// w jumps by O(1) per cell, that stencil overshoots by ~(w' h)^2 / 12 and
/// the identity w'' + w'^2 with differences taken on w is used instead. The
/// two are blended smoothly by steepness_weight.
inline void sqrt_density_curvature(std::span<const double> log_n, double h, Boundary b,
                                   std::span<double> out) {
  const std::size_t n = log_n.size();
  const double invh2 = 1.0 / (h * h);
  // Interior form from the two half-steps d_plus = w_{i+1} - w_i, d_minus = w_{i-1} - w_i.
  auto central = [invh2](double dp, double dm) {
    const double s = steepness_weight(dp, dm);
    const double smooth = (dp + dm) + 0.25 * (dp - dm) * (dp - dm);
    if (s >= 1.0) return smooth * invh2;
    const double ratio = std::expm1(dp) + std::expm1(dm);
    return ((1.0 - s) * ratio + s * smooth) * invh2;
  };
  auto w = [&](std::size_t j) { return 0.5 * log_n[j]; };
  for (std::size_t i = 1; i + 1 < n; ++i) out[i] = central(w(i + 1) - w(i), w(i - 1) - w(i));
  if (b == Boundary::periodic) {
    out[0] = central(w(1) - w(0), w(n - 1) - w(0));
    out[n - 1] = central(w(0) - w(n - 1), w(n - 2) - w(n - 1));
    return;
  }
  // One-sided: d_k = w_k - w_0 for the three inward neighbours.
  auto one_sided = [invh2](double d1, double d2, double d3) {
    const double s = steepness_weight(d2 - d1, -d1);  // centred on the first inner node
    const double w2 = -5.0 * d1 + 4.0 * d2 - d3;  // (2 w0 - 5 w1 + 4 w2 - w3), w0 = 0
    const double w1 = 0.5 * (4.0 * d1 - d2);       // (-3 w0 + 4 w1 - w2) / 2
    const double smooth = w2 + w1 * w1;
    if (s >= 1.0) return smooth * invh2;
    // (2 psi_0 - 5 psi_1 + 4 psi_2 - psi_3) / psi_0, rewritten with expm1.
    const double ratio = -5.0 * std::expm1(d1) + 4.0 * std::expm1(d2) - std::expm1(d3);
    return ((1.0 - s) * ratio + s * smooth) * invh2;
  };
  out[0] = one_sided(w(1) - w(0), w(2) - w(0), w(3) - w(0));
  out[n - 1] = one_sided(w(n - 2) - w(n - 1), w(n - 3) - w(n - 1), w(n - 4) - w(n - 1));
}

}  // namespace kernels

/// Madelung quantum potential V_qu = -(hbar^2 / 2m) (sqrt(n))'' / sqrt(n), in J.
/// Invariant under n -> c n.
inline Field quantum_potential(const DensityField& n, double mass,
                               Boundary b = Boundary::one_sided) {
  if (!(mass > 0.0)) throw ValidationError("mass must be positive");
  std::vector<double> v(n.size());
  kernels::sqrt_density_curvature(n.log_values(), n.grid().spacing(), b, v);
  const double pref = -codata.hbar * codata.hbar / (2.0 * mass);
  for (double& x : v) x *= pref;
  return Field(n.grid(), std::move(v), units::energy);
}

/// Quantum force -dV_qu/dq sampled on a grid, with the reference point q_bar
/// from which radial distance is measured. Points listed in `excluded` sit on
/// or next to the density floor and are ignored by tail fits.
struct QuantumForceProfile {
  Field force;
  double origin = 0.0;
  std::vector<std::uint8_t> excluded;
  /// When set, the force is identically zero beyond this radial distance.
  std::optional<double> support_radius;

  explicit QuantumForceProfile(Field f, double q_bar = 0.0)
      : force(std::move(f)), origin(q_bar), excluded(force.size(), 0) {}

  const Grid& grid() const { return force.grid(); }
};

inline QuantumForceProfile quantum_force(const DensityField& n, double mass, double origin,
                                         Boundary b = Boundary::one_sided) {
  const Field vq = quantum_potential(n, mass, b);
  QuantumForceProfile p(derivative(vq, 1, b).scaled(-1.0).with_unit(units::force), origin);
  // Floored points and two neighbours on each side carry stencil artefacts.
  const std::size_t sz = n.size();
  for (std::size_t i = 0; i < sz; ++i) {
    if (!n.is_floored(i)) continue;
    const std::size_t lo = i >= 2 ? i - 2 : 0;
    const std::size_t hi = std::min(sz - 1, i + 2);
    for (std::size_t j = lo; j <= hi; ++j) p.excluded[j] = 1;
  }
  return p;
}

/// Copy of `profile` with the force set to zero beyond `radius` from the origin.
inline QuantumForceProfile truncate_force(const QuantumForceProfile& profile, double radius) {
  if (!(radius > 0.0)) throw ValidationError("truncation radius must be positive");
  std::vector<double> f(profile.force.data());
  const Grid& g = profile.grid();
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (std::abs(g[i] - profile.origin) > radius) f[i] = 0.0;
  }
  QuantumForceProfile out(Field(g, std::move(f), profile.force.unit()), profile.origin);
  out.excluded = profile.excluded;
  out.support_radius = radius;
  return out;
}

enum class DecayLabel { super_ballistic, ballistic, under_ballistic, asymptotically_vanishing };

inline std::string_view to_string(DecayLabel l) {
  switch (l) {
    case DecayLabel::super_ballistic: return "super_ballistic";
    case DecayLabel::ballistic: return "ballistic";
    case DecayLabel::under_ballistic: return "under_ballistic";
    case DecayLabel::asymptotically_vanishing: return "asymptotically_vanishing";
  }
  return "unknown";
}

/// Tail of a force profile: `fitted_exponent` is a in |q^-1 dV_qu/dq| ~ q^a.
/// -infinity marks a force that is identically zero on the window.
struct DecayClass {
  DecayLabel label = DecayLabel::asymptotically_vanishing;
  double fitted_exponent = -std::numeric_limits<double>::infinity();
  bool near_boundary = false;
  std::size_t points_used = 0;
};

inline constexpr double decay_exponent_tolerance = 0.1;

/// Class boundaries sit at a = 0 and a = -1. Within the tolerance band the
/// boundary class is reported and near_boundary is set: a ~ 0 is ballistic and
/// a ~ -1 (log-divergent weighted integral) is under_ballistic.
inline DecayClass classify_exponent(double a, double tol = decay_exponent_tolerance) {
  DecayClass c;
  c.fitted_exponent = a;
  if (a > tol) {
    c.label = DecayLabel::super_ballistic;
  } else if (a >= -tol) {
    c.label = DecayLabel::ballistic;
  } else if (a >= -1.0 - tol) {
    c.label = DecayLabel::under_ballistic;
  } else {
    c.label = DecayLabel::asymptotically_vanishing;
  }
  c.near_boundary = std::abs(a) <= tol || std::abs(a + 1.0) <= tol;
  return c;
}

/// Radial window, as fractions of the largest distance from the origin to a
/// grid end, used for tail fits.
struct TailWindow {
  double inner = 0.75;
  double outer = 0.95;
  std::size_t boundary_guard = 3;
  /// Forces below this fraction of the profile maximum count as zero.
  double zero_threshold = 1e-12;
};

/// Least-squares slope of log|F/r| against log r over the tail window.
inline DecayClass growth_exponent(const QuantumForceProfile& p, const TailWindow& w = {}) {
  if (!(w.inner >= 0.0 && w.inner < w.outer && w.outer <= 1.0)) {
    throw ValidationError("tail window must satisfy 0 <= inner < outer <= 1");
  }
  const Grid& g = p.grid();
  const std::size_t n = g.size();
  const double reach = std::max(p.origin - g.q_min(), g.q_max() - p.origin);
  const double r_lo = w.inner * reach;
  const double r_hi = w.outer * reach;
  const double zero = w.zero_threshold * p.force.max_abs();

  std::vector<double> lx, ly;
  std::size_t candidates = 0;
  for (std::size_t i = w.boundary_guard; i + w.boundary_guard < n; ++i) {
    if (p.excluded[i]) continue;
    const double r = std::abs(g[i] - p.origin);
    if (r < r_lo || r > r_hi || r == 0.0) continue;
    ++candidates;
    const double f = std::abs(p.force[i]);
    if (f <= zero) continue;
    lx.push_back(std::log(r));
    ly.push_back(std::log(f / r));
  }
  if (candidates < 8) {
    throw ValidationError("tail window holds " + std::to_string(candidates) +
                          " usable points; at least 8 are required");
  }
  if (lx.size() < 8) {
    DecayClass c;
    c.points_used = candidates;
    return c;
  }
  const LinearFit fit = fit_line(lx, ly);
  DecayClass c = classify_exponent(fit.slope);
  c.points_used = lx.size();
  return c;
}

}  // namespace sqha
