#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sqha/error.hpp"
#include "sqha/grid.hpp"

namespace sqha {

/// SI dimension as integer exponents of kg, m and s.
struct Dimension {
  int kg = 0;
  int m = 0;
  int s = 0;

  friend constexpr bool operator==(Dimension, Dimension) = default;
  friend constexpr Dimension operator*(Dimension a, Dimension b) {
    return {a.kg + b.kg, a.m + b.m, a.s + b.s};
  }
  friend constexpr Dimension operator/(Dimension a, Dimension b) {
    return {a.kg - b.kg, a.m - b.m, a.s - b.s};
  }
};

namespace units {
inline constexpr Dimension dimensionless{0, 0, 0};
inline constexpr Dimension length{0, 1, 0};
inline constexpr Dimension density{0, -1, 0};  // 1-D number density
inline constexpr Dimension density_rate{0, -1, -1};
inline constexpr Dimension energy{1, 2, -2};
inline constexpr Dimension force{1, 1, -2};
inline constexpr Dimension velocity{0, 1, -1};
inline constexpr Dimension action{1, 2, -1};
}  // namespace units

inline std::string to_string(Dimension d) {
  if (d == units::dimensionless) return "1";
  std::string out;
  auto part = [&out](const char* sym, int e) {
    if (e == 0) return;
    if (!out.empty()) out += ' ';
    out += sym;
    if (e != 1) out += '^' + std::to_string(e);
  };
  part("kg", d.kg);
  part("m", d.m);
  part("s", d.s);
  return out;
}

/// Values sampled on a grid, tagged with their SI dimension.
/// Immutable after construction; every value is finite.
class Field {
 public:
  Field(Grid grid, std::vector<double> values, Dimension unit = units::dimensionless)
      : grid_(std::move(grid)), values_(std::move(values)), unit_(unit) {
    if (values_.size() != grid_.size()) {
      throw ValidationError("field has " + std::to_string(values_.size()) +
                            " values for a grid of " + std::to_string(grid_.size()) + " points");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) {
        throw NumericalError("non-finite field value at index " + std::to_string(i));
      }
    }
  }

  static Field zeros(const Grid& grid, Dimension unit = units::dimensionless) {
    return Field(grid, std::vector<double>(grid.size(), 0.0), unit);
  }

  template <class F>
  static Field from_function(const Grid& grid, F&& f, Dimension unit = units::dimensionless) {
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(grid[i]);
    return Field(grid, std::move(v), unit);
  }

  const Grid& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  const std::vector<double>& data() const { return values_; }
  Dimension unit() const { return unit_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  double max_abs() const {
    double m = 0.0;
    for (double x : values_) m = std::max(m, std::abs(x));
    return m;
  }

  Field scaled(double factor) const {
    std::vector<double> v(values_);
    for (double& x : v) x *= factor;
    return Field(grid_, std::move(v), unit_);
  }

  Field with_unit(Dimension unit) const { return Field(grid_, values_, unit); }

  friend Field operator+(const Field& a, const Field& b) { return combine(a, b, 1.0); }
  friend Field operator-(const Field& a, const Field& b) { return combine(a, b, -1.0); }

 private:
  static Field combine(const Field& a, const Field& b, double sign) {
    if (!(a.grid_ == b.grid_)) throw ValidationError("fields live on different grids");
    if (!(a.unit_ == b.unit_)) {
      throw ValidationError("unit mismatch: " + to_string(a.unit_) + " vs " + to_string(b.unit_));
    }
    std::vector<double> v(a.values_);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += sign * b.values_[i];
    return Field(a.grid_, std::move(v), a.unit_);
  }

  Grid grid_;
  std::vector<double> values_;
  Dimension unit_;
};

}  // namespace sqha
