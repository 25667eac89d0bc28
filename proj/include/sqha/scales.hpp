#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "sqha/constants.hpp"
#include "sqha/error.hpp"
#include "sqha/numerics.hpp"
#include "sqha/quantum_potential.hpp"

namespace sqha {

inline constexpr double infinite_length = std::numeric_limits<double>::infinity();

/// Noise correlation length lambda_c = (pi/2)^{3/2} hbar / sqrt(2 m k_B Theta).
/// Theta = 0 is the deterministic limit and yields infinite_length.
inline double correlation_length(double mass, double theta) {
  if (!(mass > 0.0)) throw ValidationError("mass must be positive");
  if (!(theta >= 0.0) || !std::isfinite(theta)) throw ValidationError("theta must be ≥ 0");
  if (theta == 0.0) return infinite_length;
  return std::pow(pi / 2.0, 1.5) * codata.hbar / std::sqrt(2.0 * mass * codata.k_B * theta);
}

/// Theta at which correlation_length(mass, Theta) equals `length`.
inline double theta_for_correlation_length(double mass, double length) {
  if (!(mass > 0.0)) throw ValidationError("mass must be positive");
  if (!(length > 0.0)) throw ValidationError("length must be positive");
  return std::pow(pi / 2.0, 3.0) * codata.hbar * codata.hbar /
         (2.0 * mass * codata.k_B * length * length);
}

struct ConvergenceVerdict {
  bool converges = false;
  /// Exponent fell inside the tolerance band around -1; reported as false.
  bool indeterminate = false;
  DecayClass tail;

  explicit operator bool() const { return converges; }
};

/// Whether the weighted-force integral of |q^-1 dV_qu/dq| converges at large q:
/// true iff the fitted tail exponent is below -1 outside the tolerance band.
/// A truncated profile (compact support) always converges.
inline ConvergenceVerdict convergence_test(const QuantumForceProfile& p, const TailWindow& w = {}) {
  ConvergenceVerdict v;
  if (p.support_radius) {
    v.converges = true;
    return v;
  }
  v.tail = growth_exponent(p, w);
  const double a = v.tail.fitted_exponent;
  v.indeterminate = std::abs(a + 1.0) <= decay_exponent_tolerance;
  v.converges = a < -1.0 - decay_exponent_tolerance;
  return v;
}

/// Quantum non-locality length
///   lambda_q = 2 int_0^inf |x^-1 dV_qu/dx| dx / (lambda_c^-1 |dV_qu/dx|_{x = lambda_c})
/// with x = q - origin measured on the q >= origin side. The integral runs on
/// the grid up to min(cutoff, support radius); past the cutoff a power-law tail
/// with the fitted exponent is added in closed form. Returns infinite_length
/// when the tail does not converge.
inline double nonlocality_length(const QuantumForceProfile& p, double lambda_c, double cutoff,
                                 const TailWindow& w = {}) {
  if (!(lambda_c > 0.0)) throw ValidationError("lambda_c must be positive");
  if (!(cutoff > 0.0)) throw ValidationError("integration cutoff must be positive");
  const ConvergenceVerdict verdict = convergence_test(p, w);
  if (!verdict.converges) return infinite_length;

  const Grid& g = p.grid();
  const double h = g.spacing();
  if (p.origin < g.q_min() || p.origin >= g.q_max()) {
    throw ValidationError("profile origin must lie inside the grid");
  }
  // Stencils in the last few cells are one-sided; keep them out of the sum.
  const double end = std::min({cutoff, p.support_radius.value_or(infinite_length),
                               g.q_max() - p.origin - static_cast<double>(w.boundary_guard) * h});
  if (end <= 2.0 * h) throw ValidationError("integration range shorter than two grid cells");

  // Integrand at the origin: the limit |dF/dq|.
  const Field dforce = derivative(p.force, 1);
  const double g0 = std::abs(interpolate(dforce, p.origin));

  // Nodes strictly inside (origin, origin + end].
  std::vector<double> xs, gs;
  const std::size_t first = static_cast<std::size_t>(std::floor((p.origin - g.q_min()) / h)) + 1;
  for (std::size_t i = first; i < g.size(); ++i) {
    const double x = g[i] - p.origin;
    if (x <= 0.0) continue;
    if (x > end * (1.0 + 1e-12)) break;
    xs.push_back(x);
    gs.push_back(std::abs(p.force[i]) / x);
  }
  if (xs.size() < 2) throw ValidationError("integration range holds fewer than two grid points");

  double integral = 0.5 * (g0 + gs[0]) * xs[0];
  for (std::size_t k = 1; k < xs.size(); ++k) integral += 0.5 * (gs[k] + gs[k - 1]) * (xs[k] - xs[k - 1]);
  // Partial last cell, extrapolated from the two innermost-side neighbours.
  const std::size_t last = xs.size() - 1;
  const double rest = end - xs[last];
  if (rest > 0.0) {
    const double slope = (gs[last] - gs[last - 1]) / (xs[last] - xs[last - 1]);
    const double g_end = gs[last] + slope * rest;
    integral += 0.5 * (gs[last] + g_end) * rest;
  }
  const bool truncated = p.support_radius && *p.support_radius <= end * (1.0 + 1e-12);
  if (!truncated && std::isfinite(verdict.tail.fitted_exponent)) {
    // int_X^inf g(X) (x/X)^a dx = g(X) X / (-a - 1)
    const double a = verdict.tail.fitted_exponent;
    const double g_end = gs[last];
    integral += g_end * xs[last] / (-a - 1.0);
  }

  if (lambda_c > g.q_max() - p.origin) {
    throw ValidationError("lambda_q undefined at this lambda_c: lambda_c lies outside the grid");
  }
  if (p.support_radius && lambda_c > *p.support_radius) {
    throw NumericalError("lambda_q undefined at this lambda_c: no force at lambda_c");
  }
  const double f_at = std::abs(interpolate(p.force, p.origin + lambda_c));
  if (f_at == 0.0) throw NumericalError("lambda_q undefined at this lambda_c: no force at lambda_c");
  return 2.0 * integral / (f_at / lambda_c);
}

enum class Regime { nonlocal_deterministic, nonlocal_stochastic, local_stochastic, indeterminate };

inline std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::nonlocal_deterministic: return "nonlocal_deterministic";
    case Regime::nonlocal_stochastic: return "nonlocal_stochastic";
    case Regime::local_stochastic: return "local_stochastic";
    case Regime::indeterminate: return "indeterminate";
  }
  return "unknown";
}

struct RegimeVerdict {
  Regime regime = Regime::indeterminate;
  /// The deciding length ratio is within a factor of two of the threshold.
  bool near_threshold = false;
};

/// Dynamical regime from the problem length delta_L and the two scales.
/// "Much smaller than" means at most ratio_threshold times.
inline RegimeVerdict classify_regime(double delta_L, double lambda_c, double lambda_q,
                                     double ratio_threshold = 0.1) {
  if (!(delta_L > 0.0) || !(lambda_c > 0.0) || !(lambda_q > 0.0)) {
    throw ValidationError("regime lengths must be positive");
  }
  if (!(ratio_threshold > 0.0 && ratio_threshold < 1.0)) {
    throw ValidationError("ratio threshold must lie in (0, 1)");
  }
  const double r = ratio_threshold;
  auto near = [r](double ratio) { return ratio > 0.5 * r && ratio < 2.0 * r; };
  RegimeVerdict v;
  const double lo = std::min(lambda_c, lambda_q);
  const double hi = std::max(lambda_c, lambda_q);
  if (delta_L <= r * lo) {
    v.regime = Regime::nonlocal_deterministic;
    v.near_threshold = near(delta_L / lo);
  } else if (lambda_c < delta_L && delta_L <= r * lambda_q) {
    v.regime = Regime::nonlocal_stochastic;
    v.near_threshold = near(delta_L / lambda_q);
  } else if (hi <= r * delta_L) {
    v.regime = Regime::local_stochastic;
    v.near_threshold = near(hi / delta_L);
  } else {
    v.regime = Regime::indeterminate;
    v.near_threshold = true;
  }
  return v;
}

/// Taxonomy from the decay exponent h of sqrt(n) ~ exp(-q^h).
inline DecayLabel classify_decay(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ValidationError("decay exponent h must be positive");
  constexpr double eps = 1e-12;
  if (h > 2.0 + eps) return DecayLabel::super_ballistic;
  if (h >= 2.0 - eps) return DecayLabel::ballistic;
  if (h >= 1.5) return DecayLabel::under_ballistic;
  return DecayLabel::asymptotically_vanishing;
}

struct ScaleReport {
  double lambda_c = infinite_length;
  double lambda_q = infinite_length;
  double delta_L = 0.0;
  Regime regime = Regime::indeterminate;
  bool near_threshold = false;
  double ratio_threshold = 0.1;
  std::optional<DecayClass> decay;
};

inline ScaleReport make_scale_report(double delta_L, double lambda_c, double lambda_q,
                                     double ratio_threshold = 0.1,
                                     std::optional<DecayClass> decay = std::nullopt) {
  ScaleReport s;
  s.lambda_c = lambda_c;
  s.lambda_q = lambda_q;
  s.delta_L = delta_L;
  s.ratio_threshold = ratio_threshold;
  const RegimeVerdict v = classify_regime(delta_L, lambda_c, lambda_q, ratio_threshold);
  s.regime = v.regime;
  s.near_threshold = v.near_threshold;
  s.decay = decay;
  return s;
}

}  // namespace sqha
