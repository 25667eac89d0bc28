#pragma once

namespace sqha {

/// CODATA 2018 values, SI units.
struct PhysicalConstants {
  double hbar;              // J s
  double k_B;               // J / K
  double bohr;              // m
  double atomic_mass_unit;  // kg
};

inline constexpr PhysicalConstants codata{
    1.054571817e-34,
    1.380649e-23,
    5.29177210903e-11,
    1.66053906660e-27,
};

inline constexpr double pi = 3.14159265358979323846;

}  // namespace sqha
