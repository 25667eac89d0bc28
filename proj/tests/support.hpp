#pragma once

#include <cmath>

#include "sqha/sqha.hpp"

namespace sqha::testing {

inline constexpr double helium_mass = 6.6e-26;

/// Power family on the grid used for tail fits: +-400 Lambda, 65537 points.
inline PseudoGaussianFamily power_family(double g) {
  PseudoGaussianFamily f;
  f.kind = PseudoGaussianKind::power_f;
  f.core_variance = 1e-20;
  f.lambda = 1e-9;
  f.g = g;
  return f;
}

inline Grid tail_grid(const PseudoGaussianFamily& f) {
  return centered_grid(f.center, 400.0 * f.lambda, 65537);
}

inline QuantumForceProfile family_force(const PseudoGaussianFamily& f, double mass = helium_mass) {
  return quantum_force(pseudo_gaussian_density(f, tail_grid(f)), mass, f.center);
}

/// Truncated linear force F = k (q - origin) for |q - origin| <= delta.
inline QuantumForceProfile truncated_linear(double k, double delta, const Grid& grid,
                                            double origin) {
  QuantumForceProfile p(
      Field::from_function(grid, [&](double q) { return k * (q - origin); }, units::force), origin);
  return truncate_force(p, delta);
}

inline double relative_spread(std::span<const double> v) {
  double lo = v[0], hi = v[0], mean = 0.0;
  for (double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
    mean += x;
  }
  mean /= static_cast<double>(v.size());
  return (hi - lo) / std::abs(mean);
}

}  // namespace sqha::testing
