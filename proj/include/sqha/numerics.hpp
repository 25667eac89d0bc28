#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sqha/error.hpp"
#include "sqha/field.hpp"

namespace sqha {

/// Stencil closure at the ends of the grid. `periodic` treats the grid as one
/// period of length n * spacing, i.e. the point after q_max is q_min.
enum class Boundary { one_sided, periodic };

namespace kernels {

// Second-order central differences in the interior, second-order one-sided
// stencils at the two ends (or wrap-around when periodic).
inline void first_derivative(std::span<const double> f, double h, Boundary b,
                             std::span<double> out) {
  const std::size_t n = f.size();
  const double inv2h = 0.5 / h;
  for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (f[i + 1] - f[i - 1]) * inv2h;
  if (b == Boundary::periodic) {
    out[0] = (f[1] - f[n - 1]) * inv2h;
    out[n - 1] = (f[0] - f[n - 2]) * inv2h;
  } else {
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) * inv2h;
    out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) * inv2h;
  }
}

inline void second_derivative(std::span<const double> f, double h, Boundary b,
                              std::span<double> out) {
  const std::size_t n = f.size();
  const double invh2 = 1.0 / (h * h);
  for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) * invh2;
  if (b == Boundary::periodic) {
    out[0] = (f[1] - 2.0 * f[0] + f[n - 1]) * invh2;
    out[n - 1] = (f[0] - 2.0 * f[n - 1] + f[n - 2]) * invh2;
  } else {
    out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) * invh2;
    out[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) * invh2;
  }
}

/// Composite trapezoid (one_sided) or rectangle rule over one period (periodic).
inline double integrate(std::span<const double> f, double h, Boundary b) {
  const std::size_t n = f.size();
  double s = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) s += f[i];
  if (b == Boundary::periodic) return h * (s + f[0] + f[n - 1]);
  return h * (s + 0.5 * (f[0] + f[n - 1]));
}

}  // namespace kernels

/// Finite-difference derivative of order 1 or 2. The result's unit is the
/// input unit divided by length^order.
inline Field derivative(const Field& f, int order, Boundary b = Boundary::one_sided) {
  if (order != 1 && order != 2) {
    throw ValidationError("derivative order must be 1 or 2, got " + std::to_string(order));
  }
  std::vector<double> out(f.size());
  const double h = f.grid().spacing();
  if (order == 1) {
    kernels::first_derivative(f.values(), h, b, out);
    return Field(f.grid(), std::move(out), f.unit() / units::length);
  }
  kernels::second_derivative(f.values(), h, b, out);
  return Field(f.grid(), std::move(out), f.unit() / (units::length * units::length));
}

inline double integrate(const Field& f, Boundary b = Boundary::one_sided) {
  return kernels::integrate(f.values(), f.grid().spacing(), b);
}

/// Piecewise-linear interpolation of a field at q (must lie inside the grid).
inline double interpolate(const Field& f, double q) {
  const Grid& g = f.grid();
  if (!g.contains(q)) throw ValidationError("interpolation point outside the grid");
  const double s = (q - g.q_min()) / g.spacing();
  std::size_t i = static_cast<std::size_t>(std::floor(s));
  if (i >= g.size() - 1) i = g.size() - 2;
  const double t = s - static_cast<double>(i);
  return (1.0 - t) * f[i] + t * f[i + 1];
}

/// Root of f on [lo, hi] by bisection; f(lo) and f(hi) must differ in sign.
/// Stops when the bracket no longer shrinks in floating point.
template <class F>
double bisect(F&& f, double lo, double hi, std::size_t max_iter = 200) {
  double flo = f(lo);
  const double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo < 0.0) == (fhi < 0.0)) throw NumericalError("bisection: no sign change on bracket");
  for (std::size_t it = 0; it < max_iter; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
};

/// Ordinary least squares y = slope * x + intercept.
inline LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw ValidationError("line fit needs at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw NumericalError("line fit: degenerate abscissae");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (fit.slope * x[i] + fit.intercept);
    ss += r * r;
  }
  fit.rms_residual = std::sqrt(ss / static_cast<double>(n));
  return fit;
}

}  // namespace sqha
