#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sqha/error.hpp"
#include "sqha/field.hpp"
#include "sqha/numerics.hpp"

namespace sqha {

/// Particle density n(q) >= 0 sampled on a grid, stored as ln n so that
/// far tails (e.g. pseudo-Gaussian decay at 1e-400 of the peak) stay
/// representable. Points that were clamped to the density floor are marked.
class DensityField {
 public:
  static constexpr double default_floor = 1e-12;

  /// From raw samples. Values below floor_rel * max(n) are clamped to that
  /// floor and flagged.
  static DensityField from_values(const Grid& grid, std::span<const double> n,
                                  double floor_rel = default_floor) {
    if (n.size() != grid.size()) throw ValidationError("density size does not match grid");
    double peak = 0.0;
    for (std::size_t i = 0; i < n.size(); ++i) {
      if (!std::isfinite(n[i])) throw NumericalError("non-finite density at index " + std::to_string(i));
      if (n[i] < 0.0) throw ValidationError("negative density at index " + std::to_string(i));
      peak = std::max(peak, n[i]);
    }
    if (!(peak > 0.0)) throw ValidationError("degenerate density");
    if (!(floor_rel > 0.0) || floor_rel >= 1.0) throw ValidationError("density floor must lie in (0, 1)");
    const double floor = peak * floor_rel;
    DensityField d(grid);
    for (std::size_t i = 0; i < n.size(); ++i) {
      if (n[i] <= floor) {
        d.log_n_[i] = std::log(floor);
        d.floored_[i] = 1;
      } else {
        d.log_n_[i] = std::log(n[i]);
      }
    }
    return d;
  }

  static DensityField from_values(const Field& n, double floor_rel = default_floor) {
    return from_values(n.grid(), n.values(), floor_rel);
  }

  /// From ln n directly; every entry must be finite.
  static DensityField from_log(const Grid& grid, std::vector<double> log_n) {
    if (log_n.size() != grid.size()) throw ValidationError("log-density size does not match grid");
    for (std::size_t i = 0; i < log_n.size(); ++i) {
      if (!std::isfinite(log_n[i])) {
        throw NumericalError("non-finite log-density at index " + std::to_string(i));
      }
    }
    DensityField d(grid);
    d.log_n_ = std::move(log_n);
    return d;
  }

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return log_n_.size(); }
  std::span<const double> log_values() const { return log_n_; }
  double log_value(std::size_t i) const { return log_n_[i]; }
  double value(std::size_t i) const { return std::exp(log_n_[i]); }
  bool is_floored(std::size_t i) const { return floored_[i] != 0; }
  std::span<const std::uint8_t> floored_mask() const { return floored_; }

  double peak_log() const { return *std::max_element(log_n_.begin(), log_n_.end()); }

  Field density() const {
    std::vector<double> v(log_n_.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(log_n_[i]);
    return Field(grid_, std::move(v), units::density);
  }

  double norm(Boundary b = Boundary::one_sided) const {
    const double top = peak_log();
    return std::exp(top) * relative_integral(top, b);
  }

  /// Rescaled so that the grid quadrature of n equals one.
  DensityField normalized(Boundary b = Boundary::one_sided) const {
    const double top = peak_log();
    const double shift = top + std::log(relative_integral(top, b));
    DensityField d(*this);
    for (double& u : d.log_n_) u -= shift;
    return d;
  }

  DensityField scaled(double factor) const {
    if (!(factor > 0.0)) throw ValidationError("density scale factor must be positive");
    DensityField d(*this);
    const double s = std::log(factor);
    for (double& u : d.log_n_) u += s;
    return d;
  }

 private:
  explicit DensityField(const Grid& grid)
      : grid_(grid), log_n_(grid.size(), 0.0), floored_(grid.size(), 0) {}

  double relative_integral(double top, Boundary b) const {
    std::vector<double> w(log_n_.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_n_[i] - top);
    return kernels::integrate(w, grid_.spacing(), b);
  }

  Grid grid_;
  std::vector<double> log_n_;
  std::vector<std::uint8_t> floored_;
};

}  // namespace sqha
