#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "sqha/error.hpp"

namespace sqha {

/// Uniform 1-D grid: q_i = q_min + i * spacing, i = 0 .. n_points - 1.
class Grid {
 public:
  static constexpr std::size_t min_points = 8;

  Grid(double q_min, double q_max, std::size_t n_points)
      : q_min_(q_min), q_max_(q_max), n_(n_points) {
    if (!std::isfinite(q_min) || !std::isfinite(q_max)) {
      throw ValidationError("grid bounds must be finite");
    }
    if (!(q_max > q_min)) throw ValidationError("empty domain");
    if (n_points < min_points) {
      throw ValidationError("grid needs at least " + std::to_string(min_points) +
                            " points, got " + std::to_string(n_points));
    }
    spacing_ = (q_max - q_min) / static_cast<double>(n_points - 1);
  }

  double q_min() const { return q_min_; }
  double q_max() const { return q_max_; }
  std::size_t size() const { return n_; }
  double spacing() const { return spacing_; }
  double length() const { return q_max_ - q_min_; }

  double operator[](std::size_t i) const {
    return q_min_ + static_cast<double>(i) * spacing_;
  }

  std::vector<double> points() const {
    std::vector<double> q(n_);
    for (std::size_t i = 0; i < n_; ++i) q[i] = (*this)[i];
    return q;
  }

  /// Index of the grid point nearest to q (clamped to the grid).
  std::size_t nearest_index(double q) const {
    const double s = std::round((q - q_min_) / spacing_);
    if (s <= 0.0) return 0;
    if (s >= static_cast<double>(n_ - 1)) return n_ - 1;
    return static_cast<std::size_t>(s);
  }

  bool contains(double q) const { return q >= q_min_ && q <= q_max_; }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.q_min_ == b.q_min_ && a.q_max_ == b.q_max_ && a.n_ == b.n_;
  }

 private:
  double q_min_;
  double q_max_;
  std::size_t n_;
  double spacing_;
};

inline Grid make_grid(double q_min, double q_max, std::size_t n_points) {
  return Grid(q_min, q_max, n_points);
}

/// Grid of n_points centred on `center` with half-width `half_span`.
inline Grid centered_grid(double center, double half_span, std::size_t n_points) {
  return Grid(center - half_span, center + half_span, n_points);
}

}  // namespace sqha
