#pragma once

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
#include "sqha/numerics.hpp"
#include "sqha/quantum_potential.hpp"

namespace sqha {

/// Pair-interaction parameters. The square-well fields are only needed for
/// square_well_solve.
struct MaterialParams {
  double mass = 0.0;        // kg
  double well_depth = 0.0;  // J, the L-J depth U
  double r0 = 0.0;          // m, L-J minimum / molecular distance
  std::optional<double> sigma;       // m, hard-wall position
  std::optional<double> half_width;  // m, Delta; the well spans [sigma, sigma + 2 Delta]
  double depth_factor = 0.82;        // square-well depth in units of U

  /// 4He: r0 = 7.9 Bohr, Delta = 1.54e-10 m, U = 10.9 k_B, full atomic mass.
  static MaterialParams helium4() {
    MaterialParams p;
    p.mass = 4.0026 * codata.atomic_mass_unit;
    p.well_depth = 10.9 * codata.k_B;
    p.r0 = 7.9 * codata.bohr;
    p.half_width = 1.54e-10;
    p.sigma = p.r0 - *p.half_width;
    return p;
  }

  /// Argon-like generic pair (12-6 parameters, r0 at the minimum).
  static MaterialParams generic() {
    MaterialParams p;
    p.mass = 39.948 * codata.atomic_mass_unit;
    p.well_depth = 119.8 * codata.k_B;
    p.r0 = 3.405e-10 * std::pow(2.0, 1.0 / 6.0);
    return p;
  }

  void validate() const {
    if (!(mass > 0.0) || !std::isfinite(mass)) throw ValidationError("mass must be positive");
    if (!(well_depth > 0.0) || !std::isfinite(well_depth)) {
      throw ValidationError("well_depth must be positive");
    }
    if (!(r0 > 0.0) || !std::isfinite(r0)) throw ValidationError("r0 must be positive");
    if (half_width && !(*half_width > 0.0)) throw ValidationError("half_width must be positive");
    if (!(depth_factor > 0.0)) throw ValidationError("depth_factor must be positive");
  }
};

/// Distance beyond the harmonic centre where the L-J tail is taken as flat.
enum class TruncationConstant {
  paper,             // 0.11785 r0
  lj_zero_crossing,  // (1 - 2^{-1/6}) r0, the 12-6 zero crossing measured from r0
};

inline double truncation_ratio(TruncationConstant c) {
  return c == TruncationConstant::paper ? 0.11785 : 1.0 - std::pow(2.0, -1.0 / 6.0);
}

struct HarmonicApprox {
  double k = 0.0;       // N/m
  double center = 0.0;  // m
  double E0 = 0.0;      // J
  double delta = 0.0;   // m
  double K0 = 0.0;      // 1/m
  double well_depth = 0.0;
  /// Harmonic ground level lies at or above the top of the well.
  bool level_above_well = false;
};

/// Harmonic approximation V = (k/2)(q - r0/2)^2 - U with k = U (12/r0)^2 and
/// the ground level fixed by E0 + U = (hbar/2) sqrt(k/m).
inline HarmonicApprox lj_harmonic(const MaterialParams& p,
                                  TruncationConstant c = TruncationConstant::paper) {
  p.validate();
  HarmonicApprox a;
  a.k = p.well_depth * (12.0 / p.r0) * (12.0 / p.r0);
  a.center = 0.5 * p.r0;
  const double zero_point = 0.5 * codata.hbar * std::sqrt(a.k / p.mass);
  a.E0 = zero_point - p.well_depth;
  a.K0 = std::sqrt(zero_point * p.mass) / codata.hbar;
  a.delta = truncation_ratio(c) * p.r0;
  a.well_depth = p.well_depth;
  a.level_above_well = zero_point >= p.well_depth;
  return a;
}

inline Field harmonic_potential(double k, double center, double offset, const Grid& grid) {
  return Field::from_function(
      grid, [&](double q) { return 0.5 * k * (q - center) * (q - center) + offset; },
      units::energy);
}

inline Field harmonic_potential(const HarmonicApprox& a, const Grid& grid) {
  return harmonic_potential(a.k, a.center, -a.well_depth, grid);
}

inline Field free_potential(const Grid& grid) { return Field::zeros(grid, units::energy); }

/// Normalised Gaussian density with the given centre and standard deviation.
inline DensityField gaussian_density(double center, double std_dev, const Grid& grid) {
  if (!(std_dev > 0.0)) throw ValidationError("Gaussian width must be positive");
  std::vector<double> u(grid.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double x = (grid[i] - center) / std_dev;
    u[i] = -0.5 * x * x;
  }
  return DensityField::from_log(grid, std::move(u)).normalized();
}

/// |psi_0|^2 with psi_0 = B exp(-K0^2 (q - q_bar)^2), normalised on the grid.
inline DensityField harmonic_ground_density(const HarmonicApprox& a, const Grid& grid) {
  const double span = 4.0 / a.K0;
  if (grid.q_min() > a.center - span || grid.q_max() < a.center + span) {
    std::ostringstream os;
    os << "grid too narrow: harmonic ground state needs [" << a.center - span << ", "
       << a.center + span << "] m";
    throw ValidationError(os.str());
  }
  std::vector<double> u(grid.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double x = grid[i] - a.center;
    u[i] = -2.0 * a.K0 * a.K0 * x * x;
  }
  return DensityField::from_log(grid, std::move(u)).normalized();
}

enum class MassConvention { full, reduced };

struct SquareWellState {
  double K0 = 0.0;     // 1/m, interior wave number
  double kappa = 0.0;  // 1/m, exterior decay constant
  double E0 = 0.0;     // J, negative
  double sigma = 0.0;  // m
  double width = 0.0;  // m, 2 Delta
  double depth = 0.0;  // J
  double mass = 0.0;   // kg actually used
  /// a K cot(K a) + a kappa at the returned root (dimensionless).
  double matching_residual = 0.0;
};

/// Lowest bound state of: infinite wall for q < sigma, -depth_factor U on
/// [sigma, sigma + 2 Delta], zero beyond. Bisection on the matching condition
/// K cot(K 2Delta) = -kappa in the interior wave number.
inline SquareWellState square_well_solve(const MaterialParams& p,
                                         MassConvention mc = MassConvention::full) {
  p.validate();
  if (!p.half_width) throw ValidationError("square well needs half_width");
  SquareWellState s;
  s.width = 2.0 * *p.half_width;
  s.sigma = p.sigma.value_or(p.r0 - *p.half_width);
  s.depth = p.depth_factor * p.well_depth;
  s.mass = mc == MassConvention::full ? p.mass : 0.5 * p.mass;
  const double a = s.width;
  const double k_max = std::sqrt(2.0 * s.mass * s.depth) / codata.hbar;
  if (k_max * a <= pi / 2.0) throw NumericalError("no bound state: well too shallow or narrow");

  // In t = K a the condition reads t cot t + sqrt((k_max a)^2 - t^2) = 0; the
  // ground state has t in (pi/2, min(pi, k_max a)).
  const double ta = k_max * a;
  auto residual = [ta](double t) { return t / std::tan(t) + std::sqrt(std::max(0.0, ta * ta - t * t)); };
  const double lo = pi / 2.0;
  const double hi = std::min(pi, ta);
  double hi_eval = hi;
  if (hi == pi) hi_eval = std::nextafter(pi, 0.0);
  const double t = bisect(residual, lo, hi_eval);
  s.K0 = t / a;
  s.kappa = std::sqrt(std::max(0.0, k_max * k_max - s.K0 * s.K0));
  s.E0 = -codata.hbar * codata.hbar * s.kappa * s.kappa / (2.0 * s.mass);
  s.matching_residual = residual(t);
  return s;
}

/// Bound-state density: zero behind the wall, sin^2 inside, exponential tail.
inline DensityField square_well_density(const SquareWellState& s, const Grid& grid,
                                        double floor_rel = DensityField::default_floor) {
  std::vector<double> n(grid.size());
  const double edge = std::sin(s.K0 * s.width);
  for (std::size_t i = 0; i < n.size(); ++i) {
    const double x = grid[i] - s.sigma;
    if (x <= 0.0) {
      n[i] = 0.0;
    } else if (x <= s.width) {
      const double v = std::sin(s.K0 * x);
      n[i] = v * v;
    } else {
      const double v = edge * std::exp(-s.kappa * (x - s.width));
      n[i] = v * v;
    }
  }
  return DensityField::from_values(grid, n, floor_rel).normalized();
}

enum class PseudoGaussianKind { constant_f, linear_f, log_f, power_f };

inline std::string_view to_string(PseudoGaussianKind k) {
  switch (k) {
    case PseudoGaussianKind::constant_f: return "constant";
    case PseudoGaussianKind::linear_f: return "linear";
    case PseudoGaussianKind::log_f: return "log";
    case PseudoGaussianKind::power_f: return "power";
  }
  return "unknown";
}

/// n = n0 exp[-x^2 / (dq2 (1 + x^2 / (Lambda^2 f(x))))], x = q - q_bar, with
/// f = 1, 1 + |x|/Lambda, 1 + ln(1 + (|x|/Lambda)^h) or 1 + (|x|/Lambda)^g.
/// Distances inside f are measured in units of Lambda.
struct PseudoGaussianFamily {
  PseudoGaussianKind kind = PseudoGaussianKind::power_f;
  double core_variance = 0.0;  // dq^2, m^2
  double lambda = 0.0;         // Lambda, m
  double g = 2.0;              // power_f exponent, (0, 2]
  double h = 1.0;              // log_f exponent
  double center = 0.0;         // q_bar, m

  double f(double x) const {
    const double s = std::abs(x) / lambda;
    switch (kind) {
      case PseudoGaussianKind::constant_f: return 1.0;
      case PseudoGaussianKind::linear_f: return 1.0 + s;
      case PseudoGaussianKind::log_f: return 1.0 + std::log1p(std::pow(s, h));
      case PseudoGaussianKind::power_f: return 1.0 + std::pow(s, g);
    }
    return 1.0;
  }

  /// ln(n / n0) at distance x from the centre.
  double log_shape(double x) const {
    const double x2 = x * x;
    return -x2 / (core_variance * (1.0 + x2 / (lambda * lambda * f(x))));
  }

  void validate() const {
    if (!(core_variance > 0.0)) throw ValidationError("core variance must be positive");
    if (!(lambda > 0.0)) throw ValidationError("Lambda must be positive");
    if (lambda * lambda < 100.0 * core_variance) {
      throw ValidationError("pseudo-Gaussian needs Lambda^2 >= 100 dq^2");
    }
    if (kind == PseudoGaussianKind::power_f && !(g > 0.0 && g <= 2.0)) {
      throw ValidationError("power family exponent g must lie in (0, 2]");
    }
    if (kind == PseudoGaussianKind::log_f && !(h > 0.0)) {
      throw ValidationError("log family exponent h must be positive");
    }
  }
};

/// Sampled and normalised; n(q_bar) is then the normalisation constant n0.
inline DensityField pseudo_gaussian_density(const PseudoGaussianFamily& fam, const Grid& grid) {
  fam.validate();
  std::vector<double> u(grid.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = fam.log_shape(grid[i] - fam.center);
  return DensityField::from_log(grid, std::move(u)).normalized();
}

/// Large-distance quantum force F ~ c1 x^e1 + c2 x^e2.
struct TailForceDescriptor {
  double leading_exponent = 0.0;  // of the force itself
  double leading_coefficient = 0.0;
  double subleading_exponent = 0.0;
  double subleading_coefficient = 0.0;
  /// Force tends to zero at large distance.
  bool vanishing = false;
  /// Leading exponent sits on the ballistic boundary within tolerance.
  bool boundary = false;
  /// Both closed-form coefficients vanish, the true decay is set by
  /// higher-order terms of the density.
  bool degenerate = false;
  bool from_fit = false;

  /// Exponent a of |x^-1 F| ~ x^a.
  double weighted_exponent() const { return leading_exponent - 1.0; }
};

/// Closed-form tail for the power family: with sqrt(n) ~ exp(-c x^g),
/// c = Lambda^{2-g} / (2 dq^2),
///   F = (hbar^2/2m) [2 (g-1) g^2 c^2 x^{2g-3} - (g-1)(g-2) g c x^{g-3}].
inline TailForceDescriptor pseudo_gaussian_tail_force(const PseudoGaussianFamily& fam, double mass) {
  fam.validate();
  if (fam.kind != PseudoGaussianKind::power_f) {
    throw ValidationError("closed-form tail only exists for the power family; pass a grid");
  }
  if (!(mass > 0.0)) throw ValidationError("mass must be positive");
  const double g = fam.g;
  const double c = std::pow(fam.lambda, 2.0 - g) / (2.0 * fam.core_variance);
  const double pref = codata.hbar * codata.hbar / (2.0 * mass);
  TailForceDescriptor d;
  d.leading_exponent = 2.0 * g - 3.0;
  d.subleading_exponent = g - 3.0;
  d.leading_coefficient = pref * 2.0 * (g - 1.0) * g * g * c * c;
  d.subleading_coefficient = -pref * (g - 1.0) * (g - 2.0) * g * c;
  d.vanishing = d.leading_exponent < 0.0;
  d.boundary = std::abs(d.leading_exponent) <= decay_exponent_tolerance;
  d.degenerate = d.leading_coefficient == 0.0 && d.subleading_coefficient == 0.0;
  return d;
}

/// Any family: the power family uses the closed form, the others are fitted
/// on the sampled density over the default tail window.
inline TailForceDescriptor pseudo_gaussian_tail_force(const PseudoGaussianFamily& fam, double mass,
                                                      const Grid& grid) {
  if (fam.kind == PseudoGaussianKind::power_f) return pseudo_gaussian_tail_force(fam, mass);
  const DensityField n = pseudo_gaussian_density(fam, grid);
  const DecayClass c = growth_exponent(quantum_force(n, mass, fam.center));
  TailForceDescriptor d;
  d.from_fit = true;
  d.leading_exponent = c.fitted_exponent + 1.0;
  d.vanishing = d.leading_exponent < 0.0;
  d.boundary = c.near_boundary && c.label == DecayLabel::ballistic;
  return d;
}

}  // namespace sqha
