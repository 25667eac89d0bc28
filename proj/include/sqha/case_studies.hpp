#pragma once

#include <algorithm>
#include <cmath>

#include "sqha/constants.hpp"
#include "sqha/error.hpp"
#include "sqha/grid.hpp"
#include "sqha/potentials_states.hpp"
#include "sqha/quantum_potential.hpp"
#include "sqha/scales.hpp"

namespace sqha {

inline constexpr double lindemann_band_low = 0.20;
inline constexpr double lindemann_band_high = 0.25;

struct LindemannReport {
  double lambda_q_over_r0 = 0.0;
  double delta_over_r0 = 0.0;
  bool within_empirical_band = false;
  double lambda_q = 0.0;  // m
  double delta = 0.0;     // m
  double r0 = 0.0;        // m
  double lambda_c = 0.0;  // m, reference distance used in the denominator
  HarmonicApprox approx;
  std::size_t grid_resolution = 0;
  bool full_tail = false;
};

/// Non-locality length of the L-J harmonic ground state. The quantum force of
/// the Gaussian is evaluated on a grid centred at the harmonic centre and, by
/// default, cut to zero beyond delta (the flat part of the potential). With
/// full_tail the linear force is kept everywhere and lambda_q diverges.
inline LindemannReport lindemann(const MaterialParams& params, std::size_t grid_resolution = 4001,
                                 TruncationConstant constant = TruncationConstant::paper,
                                 bool full_tail = false) {
  params.validate();
  if (grid_resolution < 101) throw ValidationError("grid_resolution must be at least 101");
  if (grid_resolution % 2 == 0) ++grid_resolution;  // keep a node on the centre
  const HarmonicApprox a = lj_harmonic(params, constant);
  const double half_span = std::max(4.0 / a.K0, 1.25 * a.delta);
  const Grid grid = centered_grid(a.center, half_span, grid_resolution);
  const DensityField n = harmonic_ground_density(a, grid);
  QuantumForceProfile force = quantum_force(n, params.mass, a.center);
  if (!full_tail) force = truncate_force(force, a.delta);

  LindemannReport r;
  r.approx = a;
  r.r0 = params.r0;
  r.delta = a.delta;
  r.delta_over_r0 = a.delta / params.r0;
  r.lambda_c = 0.5 * a.delta;
  r.lambda_q = nonlocality_length(force, r.lambda_c, full_tail ? half_span : a.delta);
  r.lambda_q_over_r0 = r.lambda_q / params.r0;
  r.within_empirical_band =
      r.lambda_q_over_r0 >= lindemann_band_low && r.lambda_q_over_r0 <= lindemann_band_high;
  r.grid_resolution = grid_resolution;
  r.full_tail = full_tail;
  return r;
}

struct LambdaPointReport {
  double theta_star = 0.0;  // K, lambda_c(theta_star) = 2 Delta
  double paper_value = 2.17;
  double lambda_c_at_paper_theta = 0.0;  // m
  double two_delta = 0.0;                // m
  /// |lambda_c(theta_star) / (2 Delta) - 1|
  double forward_relative_error = 0.0;
};

inline LambdaPointReport helium_lambda(const MaterialParams& params) {
  if (!params.half_width || !(*params.half_width > 0.0)) {
    throw ValidationError("half_width (Delta) must be positive");
  }
  if (!(params.mass > 0.0)) throw ValidationError("mass must be positive");
  LambdaPointReport r;
  r.two_delta = 2.0 * *params.half_width;
  r.theta_star = theta_for_correlation_length(params.mass, r.two_delta);
  r.lambda_c_at_paper_theta = correlation_length(params.mass, r.paper_value);
  r.forward_relative_error =
      std::abs(correlation_length(params.mass, r.theta_star) / r.two_delta - 1.0);
  return r;
}

struct HeliumStateReport {
  SquareWellState state;
  MassConvention mass_convention = MassConvention::full;
  double E0_over_kB = 0.0;
  double paper_E0_over_kB = -5.19;
  bool E0_within_band = false;  // [-5.7, -4.7]
  /// Largest |quantum force| at interior well points, N.
  double max_inner_force = 0.0;
  /// k * delta of the harmonic approximation with the same parameters, N.
  double harmonic_core_force = 0.0;
  double inner_force_ratio = 0.0;
  double lambda_q_over_r0 = 0.0;       // harmonic estimate 2 delta / r0
  double two_delta_over_r0 = 0.0;      // from Delta and r0 as given
  double paper_two_delta_over_r0 = 0.4340;
  bool ordering_holds = false;        // lambda_q < 2 Delta with computed numbers
  bool ordering_holds_paper = false;  // same with the paper's 0.4340
};

/// Square-well ground state of the He pair: energy, vanishing quantum force
/// inside the well, and the lambda_q < 2 Delta ordering.
inline HeliumStateReport helium_state_check(const MaterialParams& params,
                                            MassConvention mc = MassConvention::full,
                                            std::size_t points_across_well = 400) {
  params.validate();
  if (points_across_well < 16) throw ValidationError("points_across_well must be at least 16");
  HeliumStateReport r;
  r.mass_convention = mc;
  r.state = square_well_solve(params, mc);
  const SquareWellState& s = r.state;
  r.E0_over_kB = s.E0 / codata.k_B;
  r.E0_within_band = r.E0_over_kB >= -5.7 && r.E0_over_kB <= -4.7;

  // Grid starts at the wall and extends three decay lengths past the well.
  const double h = s.width / static_cast<double>(points_across_well);
  const double span = s.width + 3.0 / s.kappa;
  const auto n_points = static_cast<std::size_t>(std::ceil(span / h)) + 1;
  const Grid grid(s.sigma, s.sigma + static_cast<double>(n_points - 1) * h, n_points);
  const DensityField n = square_well_density(s, grid);
  const QuantumForceProfile f = quantum_force(n, s.mass, s.sigma);
  constexpr std::size_t edge_cells = 3;
  for (std::size_t i = edge_cells; i + edge_cells <= points_across_well; ++i) {
    r.max_inner_force = std::max(r.max_inner_force, std::abs(f.force[i]));
  }
  const HarmonicApprox a = lj_harmonic(params);
  r.harmonic_core_force = a.k * a.delta;
  r.inner_force_ratio = r.max_inner_force / r.harmonic_core_force;

  r.lambda_q_over_r0 = 2.0 * a.delta / params.r0;
  r.two_delta_over_r0 = s.width / params.r0;
  r.ordering_holds = r.lambda_q_over_r0 < r.two_delta_over_r0;
  r.ordering_holds_paper = r.lambda_q_over_r0 < r.paper_two_delta_over_r0;
  return r;
}

}  // namespace sqha
