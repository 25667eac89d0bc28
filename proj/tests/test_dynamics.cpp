#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "sqha/sqha.hpp"
#include "support.hpp"

using namespace sqha;

namespace {

struct FreePacket {
  double mass = 1e-27;
  double sigma0 = 1e-10;
  Grid grid = centered_grid(0.0, 14.0 * 1e-10, 561);
  IntegratorConfig cfg() const {
    IntegratorConfig c;
    c.dt = max_stable_dt(mass, grid.spacing(), 0.5);
    return c;
  }
  /// Closed-form free Schroedinger width.
  double width(double t) const {
    const double tau = codata.hbar * t / (2.0 * mass * sigma0 * sigma0);
    return sigma0 * std::sqrt(1.0 + tau * tau);
  }
  double doubling_time() const { return std::sqrt(3.0) * 2.0 * mass * sigma0 * sigma0 / codata.hbar; }
};

struct HarmonicWell {
  MaterialParams params = MaterialParams::generic();
  HarmonicApprox approx = lj_harmonic(params);
  Grid grid = centered_grid(approx.center, 6.0 / approx.K0, 401);
  Field potential = harmonic_potential(approx, grid);
  double omega() const { return std::sqrt(approx.k / params.mass); }
  double period() const { return 2.0 * pi / omega(); }
  IntegratorConfig cfg() const {
    IntegratorConfig c;
    c.dt = max_stable_dt(params.mass, grid.spacing(), 0.5);
    return c;
  }
  HydroState ground() const {
    return make_state(harmonic_ground_density(approx, grid), params.mass);
  }
};

double l2_relative(const DensityField& a, const DensityField& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.value(i) - b.value(i);
    num += d * d;
    den += b.value(i) * b.value(i);
  }
  return std::sqrt(num / den);
}

double excess_kurtosis(const DensityField& d) {
  const Grid& g = d.grid();
  double m0 = 0.0, m1 = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    m0 += d.value(i);
    m1 += d.value(i) * g[i];
  }
  const double mean = m1 / m0;
  double m2 = 0.0, m4 = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g[i] - mean;
    m2 += d.value(i) * x * x;
    m4 += d.value(i) * x * x * x * x;
  }
  m2 /= m0;
  m4 /= m0;
  return m4 / (m2 * m2) - 3.0;
}

HydroState advance(HydroState s, const Field& v, double mass, const IntegratorConfig& cfg,
                   std::size_t steps) {
  for (std::size_t k = 0; k < steps; ++k) s = step_deterministic(s, v, mass, cfg);
  return s;
}

}  // namespace

TEST(Deterministic, FreeGaussianFollowsWidthLaw) {
  const FreePacket f;
  HydroState s = make_state(gaussian_density(0.0, f.sigma0, f.grid), f.mass);
  const Field v = free_potential(f.grid);
  const IntegratorConfig cfg = f.cfg();
  const auto steps = static_cast<std::size_t>(std::ceil(f.doubling_time() / cfg.dt));
  ASSERT_GE(steps, 500u);
  double worst = 0.0;
  for (std::size_t k = 1; k <= steps; ++k) {
    s = step_deterministic(s, v, f.mass, cfg);
    if (k % 97 == 0 || k == steps) {
      const Observables o = observe(s, v, f.mass);
      worst = std::max(worst, std::abs(std::sqrt(o.variance) / f.width(s.time) - 1.0));
    }
  }
  EXPECT_LT(worst, 0.01);
  EXPECT_GE(std::sqrt(observe(s, v, f.mass).variance), 1.99 * f.sigma0);
  EXPECT_LT(std::abs(excess_kurtosis(s.density)), 0.01);
}

TEST(Deterministic, HarmonicGroundStateIsStationary) {
  const HarmonicWell w;
  const HydroState s0 = w.ground();
  const IntegratorConfig cfg = w.cfg();
  const auto steps = static_cast<std::size_t>(std::ceil(w.period() / cfg.dt));
  IntegratorConfig c = cfg;
  c.dt = w.period() / static_cast<double>(steps);
  const HydroState s1 = advance(s0, w.potential, w.params.mass, c, steps);
  EXPECT_LT(l2_relative(s1.density, s0.density), 1e-3);
  const double e0 = observe(s0, w.potential, w.params.mass).total_energy();
  const double e1 = observe(s1, w.potential, w.params.mass).total_energy();
  EXPECT_LT(std::abs(e1 / e0 - 1.0), 1e-3);
}

TEST(Deterministic, UniformDensityIsAFixedPoint) {
  const Grid g = make_grid(0.0, 1e-9 * 63.0 / 64.0, 64);
  const double mass = 1e-26;
  const HydroState s0 = make_state(DensityField::from_values(g, std::vector<double>(64, 1e9)), mass);
  IntegratorConfig cfg;
  cfg.boundary = BoundaryCondition::periodic;
  cfg.dt = max_stable_dt(mass, g.spacing(), 0.5);
  const HydroState s1 = advance(s0, free_potential(g), mass, cfg, 50);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_NEAR(s1.density.value(i), 1e9, 1e9 * 1e-13);
    EXPECT_NEAR(s1.velocity[i], 0.0, 1e-12);
  }
  EXPECT_DOUBLE_EQ(s1.time, 50.0 * cfg.dt);
}

TEST(Deterministic, CflViolationIsRejected) {
  const FreePacket f;
  const HydroState s = make_state(gaussian_density(0.0, f.sigma0, f.grid), f.mass);
  IntegratorConfig cfg = f.cfg();
  cfg.dt *= 2.1;
  try {
    step_deterministic(s, free_potential(f.grid), f.mass, cfg);
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("CFL violation"), std::string::npos);
  }
}

TEST(Deterministic, NormConservedOverThousandSteps) {
  const HarmonicWell w;
  // Displaced and moving packet, away from the edges.
  const HydroState s0 = make_state(
      gaussian_density(w.approx.center + 1.0 / w.approx.K0, 0.5 / w.approx.K0, w.grid),
      w.params.mass,
      Field::from_function(w.grid, [](double) { return 30.0; }, units::velocity));
  const HydroState s1 = advance(s0, w.potential, w.params.mass, w.cfg(), 1000);
  EXPECT_LT(std::abs(s1.density.norm() / s0.density.norm() - 1.0), 1e-6);
}

TEST(Deterministic, GalileanShiftOnPeriodicGrid) {
  const std::size_t n = 128;
  const double length = 2e-9;
  const double mass = 1e-26;
  const Grid g = make_grid(0.0, length * static_cast<double>(n - 1) / static_cast<double>(n), n);
  const double k = 2.0 * pi / length;
  std::vector<double> u(n), v(n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = std::log(1.0 + 0.5 * std::cos(k * g[i]) + 0.2 * std::sin(2.0 * k * g[i]));
    v[i] = 20.0 * std::sin(k * g[i]);
  }
  auto rotate = [](std::vector<double> x) {
    std::rotate(x.begin(), x.end() - 1, x.end());
    return x;
  };
  IntegratorConfig cfg;
  cfg.boundary = BoundaryCondition::periodic;
  cfg.dt = max_stable_dt(mass, g.spacing(), 0.5);
  const Field zero = free_potential(g);
  const HydroState a = advance(make_state(DensityField::from_log(g, u), mass, Field(g, v, units::velocity)),
                               zero, mass, cfg, 300);
  const HydroState b = advance(
      make_state(DensityField::from_log(g, rotate(u)), mass, Field(g, rotate(v), units::velocity)),
      zero, mass, cfg, 300);
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) peak = std::max(peak, a.density.value(i));
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_NEAR(b.density.value((i + 1) % n), a.density.value(i), 1e-10 * peak);
  }
}

TEST(Deterministic, TimeReversalErrorIsFifthOrder) {
  // A smooth packet returns to round-off; a narrow boosted one (width 3h,
  // k h = 1/2) carries enough high-k content to expose the truncation error.
  const FreePacket f;
  const Field v = free_potential(f.grid);
  const double h = f.grid.spacing();
  const double boost = codata.hbar * 0.5 / (f.mass * h);
  const HydroState s0 = make_state(
      gaussian_density(0.0, 3.0 * h, f.grid), f.mass,
      Field::from_function(f.grid, [boost](double) { return boost; }, units::velocity));
  auto round_trip_error = [&](double dt) {
    IntegratorConfig cfg;
    cfg.dt = dt;
    const HydroState fwd = step_deterministic(s0, v, f.mass, cfg);
    const HydroState back = step_deterministic(reversed(fwd), v, f.mass, cfg);
    double e = 0.0, peak = 0.0;
    for (std::size_t i = 0; i < f.grid.size(); ++i) {
      e = std::max(e, std::abs(back.density.value(i) - s0.density.value(i)));
      peak = std::max(peak, s0.density.value(i));
    }
    return e / peak;
  };
  const double dt = f.cfg().dt;
  const double e1 = round_trip_error(dt);
  const double e2 = round_trip_error(0.5 * dt);
  EXPECT_LT(e1, 1e-6);
  EXPECT_GT(e1, 1e-12);
  // Local error O(dt^5) or better: halving dt divides it by at least ~32.
  EXPECT_GT(e1 / e2, 20.0);
}

TEST(Stochastic, ZeroThetaIsBitIdentical) {
  const HarmonicWell w;
  const NoiseModel m = NoiseModel::make(w.params.mass, 0.0, 1.0, true, 1e-10);
  const CorrelatedFieldSampler sampler(m, w.grid);
  RandomStream stream(3);
  const HydroState s0 = w.ground();
  const HydroState a = step_stochastic(s0, w.potential, w.params.mass, sampler, stream, w.cfg());
  const HydroState b = step_deterministic(s0, w.potential, w.params.mass, w.cfg());
  const auto la = a.density.log_values(), lb = b.density.log_values();
  EXPECT_TRUE(std::equal(la.begin(), la.end(), lb.begin(), lb.end()));
  EXPECT_EQ(a.velocity.data(), b.velocity.data());
  EXPECT_EQ(a.action.data(), b.action.data());
}

TEST(Stochastic, ConservingKickKeepsNorm) {
  // Strong noise floors part of the density each step; the floor-and-
  // renormalise pass must hand back exactly the norm the deterministic
  // part produced.
  const HarmonicWell w;
  const NoiseModel m = NoiseModel::make(w.params.mass, 1.0, 1e36, true);
  const CorrelatedFieldSampler sampler(m, w.grid);
  RandomStream stream(8);
  HydroState s = w.ground();
  StepDiagnostics diag;
  std::size_t floored = 0;
  for (int k = 0; k < 20; ++k) {
    const double expected = step_deterministic(s, w.potential, w.params.mass, w.cfg()).density.norm();
    s = step_stochastic(s, w.potential, w.params.mass, sampler, stream, w.cfg(), &diag);
    EXPECT_NEAR(s.density.norm() / expected, 1.0, 1e-12);
    floored += diag.floored_points;
  }
  EXPECT_GT(floored, 0u);
}

TEST(Stochastic, EnsembleMeanTracksDeterministicProfile) {
  const HarmonicWell w;
  // Kicks that reach the density floor are clipped upwards, which biases the
  // ensemble mean at first order in the noise amplitude. The domain is cut
  // where the density is still e^-8 of its peak and the mobility is set so
  // that no kick is clipped while members still spread by about 10%.
  const Grid g = centered_grid(w.approx.center, 2.0 / w.approx.K0, 135);
  const Field v = harmonic_potential(w.approx, g);
  const HydroState ground =
      make_state(gaussian_density(w.approx.center, 0.5 / w.approx.K0, g), w.params.mass);
  const NoiseModel m = NoiseModel::make(w.params.mass, 1.0, 1e28, true);
  const CorrelatedFieldSampler sampler(m, g);
  IntegratorConfig cfg;
  cfg.dt = max_stable_dt(w.params.mass, v, 0.5);
  const std::size_t steps = 100, members = 120;
  const HydroState det = advance(ground, v, w.params.mass, cfg, steps);

  const std::size_t n = g.size();
  std::vector<double> sum(n, 0.0), sum2(n, 0.0);
  std::size_t floored = 0;
  const RandomStream root(2026);
  for (std::size_t e = 0; e < members; ++e) {
    RandomStream stream = root.split(e);
    HydroState s = ground;
    for (std::size_t k = 0; k < steps; ++k) {
      StepDiagnostics diag;
      s = step_stochastic(s, v, w.params.mass, sampler, stream, cfg, &diag);
      floored += diag.floored_points;
    }
    for (std::size_t i = 0; i < n; ++i) {
      sum[i] += s.density.value(i);
      sum2[i] += s.density.value(i) * s.density.value(i);
    }
  }
  ASSERT_EQ(floored, 0u);
  const double mcount = static_cast<double>(members);
  double chi2 = 0.0;
  std::size_t outliers = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double mean = sum[i] / mcount;
    const double var = (sum2[i] / mcount - mean * mean) * mcount / (mcount - 1.0);
    const double se = std::sqrt(var / mcount);
    ASSERT_GT(se, 0.0);
    const double z = (mean - det.density.value(i)) / se;
    chi2 += z * z;
    if (std::abs(z) > 3.0) ++outliers;
  }
  // Pointwise z-scores are correlated across the kernel width; test the bulk.
  EXPECT_LT(chi2 / static_cast<double>(n), 2.0);
  EXPECT_LE(outliers, n / 20);
}

TEST(Classical, OscillatorMeanFollowsCosine) {
  const HarmonicWell w;
  const double amp = 2.0 / w.approx.K0;
  const Grid g = centered_grid(w.approx.center, 5.0 * amp, 801);
  const Field v = harmonic_potential(w.approx, g);
  HydroState s = make_state(gaussian_density(w.approx.center + amp, 0.3 * amp, g), w.params.mass);
  IntegratorConfig cfg;
  cfg.scheme = Scheme::classical_limit;
  cfg.dt = w.period() / 6000.0;
  cfg.cfl_safety = 1.0;
  ASSERT_LE(cfg.dt, max_stable_dt(w.params.mass, g.spacing(), 1.0));
  // Every fluid element has the same period, so the packet focuses at T/4;
  // compare before the caustic.
  for (int k = 1; k <= 1200; ++k) {
    s = step_classical(s, v, w.params.mass, cfg);
    if (k % 150 == 0) {
      const double mean = observe(s, v, w.params.mass).mean_q - w.approx.center;
      EXPECT_NEAR(mean, amp * std::cos(w.omega() * s.time), 0.01 * amp) << "t = " << s.time;
    }
  }
}

TEST(Classical, FreePacketMovesAtConstantVelocity) {
  const FreePacket f;
  const double v0 = 50.0;
  HydroState s = make_state(gaussian_density(-2.0 * f.sigma0, f.sigma0, f.grid), f.mass,
                            Field::from_function(f.grid, [v0](double) { return v0; }, units::velocity));
  IntegratorConfig cfg = f.cfg();
  cfg.scheme = Scheme::classical_limit;
  const Field v = free_potential(f.grid);
  const double start = observe(s, v, f.mass).mean_q;
  for (int k = 0; k < 2000; ++k) s = step_classical(s, v, f.mass, cfg);
  const double moved = observe(s, v, f.mass).mean_q - start;
  EXPECT_NEAR(moved / (v0 * s.time), 1.0, 1e-3);
  for (std::size_t i = 0; i < f.grid.size(); ++i) EXPECT_NEAR(s.velocity[i], v0, 1e-9 * v0);
}

TEST(Classical, WideProfileAgreesWithQuantum) {
  const HarmonicWell w;
  const double width = 4.0 / w.approx.K0;
  const double amp = 2.0 / w.approx.K0;
  // Peak wavenumber 2 K0^2 amp must stay well resolved (k h < 0.1).
  const Grid g = centered_grid(w.approx.center, amp + 6.0 * width, 2001);
  const Field v = harmonic_potential(w.approx, g);
  const HydroState s0 = make_state(gaussian_density(w.approx.center + amp, width, g), w.params.mass);
  IntegratorConfig qc;
  qc.dt = max_stable_dt(w.params.mass, v, 0.5);
  IntegratorConfig cc = qc;
  cc.scheme = Scheme::classical_limit;
  // A tenth of a period: well before the classical profile focuses.
  const auto steps = static_cast<std::size_t>(std::ceil(0.1 * w.period() / qc.dt));
  HydroState q = s0, c = s0;
  for (std::size_t k = 0; k < steps; ++k) {
    q = step_deterministic(q, v, w.params.mass, qc);
    c = step_classical(c, v, w.params.mass, cc);
  }
  const double dq = observe(q, v, w.params.mass).mean_q - w.approx.center;
  const double dc = observe(c, v, w.params.mass).mean_q - w.approx.center;
  const double exact = amp * std::cos(2.0 * pi * q.time / w.period());
  ASSERT_LT(dq, 0.9 * amp);
  EXPECT_NEAR(dc, exact, 1e-6 * amp);
  EXPECT_NEAR(dq, dc, 0.01 * std::abs(amp - dc));
}

TEST(Classical, ResidueIsDifferenceOfQuantumForces) {
  const HarmonicWell w;
  const DensityField ref = harmonic_ground_density(w.approx, w.grid);
  const ClassicalResidue r = classical_residue(ref, ref, w.params.mass);
  EXPECT_EQ(r.delta_force.max_abs(), 0.0);
  EXPECT_EQ(r.delta_force.unit(), units::force);
}

TEST(Run, ZeroDurationHoldsOnlyInitialSnapshot) {
  const HarmonicWell w;
  const Trajectory t = run(w.ground(), w.potential, w.params.mass, std::nullopt, w.cfg(), 0.0, 10);
  ASSERT_EQ(t.snapshots.size(), 1u);
  EXPECT_EQ(t.steps_taken, 0u);
  EXPECT_FALSE(t.failure);
}

TEST(Run, FreeVarianceIsMonotone) {
  const FreePacket f;
  const HydroState s = make_state(gaussian_density(0.0, f.sigma0, f.grid), f.mass);
  const IntegratorConfig cfg = f.cfg();
  const Trajectory t = run(s, free_potential(f.grid), f.mass, std::nullopt, cfg, 600 * cfg.dt, 25);
  ASSERT_EQ(t.snapshots.size(), 25u);
  for (std::size_t k = 1; k < t.snapshots.size(); ++k) {
    EXPECT_GT(t.snapshots[k].observables.variance, t.snapshots[k - 1].observables.variance);
  }
  EXPECT_FALSE(t.domain_too_small);
}

TEST(Run, HarmonicEnergyIsConstant) {
  const HarmonicWell w;
  const IntegratorConfig cfg = w.cfg();
  const Trajectory t = run(w.ground(), w.potential, w.params.mass, std::nullopt, cfg, w.period(), 500);
  const double e0 = t.snapshots.front().observables.total_energy();
  for (const Snapshot& s : t.snapshots) {
    EXPECT_LT(std::abs(s.observables.total_energy() / e0 - 1.0), 1e-3);
  }
  EXPECT_NEAR(t.snapshots.back().state.time, w.period(), 1e-9 * w.period());
}

TEST(Run, LandsExactlyOnEndTime) {
  const HarmonicWell w;
  const IntegratorConfig cfg = w.cfg();
  const Trajectory t = run(w.ground(), w.potential, w.params.mass, std::nullopt, cfg, 10.5 * cfg.dt, 4);
  EXPECT_EQ(t.steps_taken, 11u);
  EXPECT_NEAR(t.snapshots.back().state.time, 10.5 * cfg.dt, 1e-12 * cfg.dt);
  EXPECT_EQ(t.snapshots.size(), 1u + 2u + 1u);
}

TEST(Run, DomainGuardFlagsWideDensity) {
  const FreePacket f;
  const HydroState s = make_state(gaussian_density(0.0, 5.0 * f.sigma0, f.grid), f.mass);
  const Trajectory t = run(s, free_potential(f.grid), f.mass, std::nullopt, f.cfg(), 0.0, 1);
  EXPECT_TRUE(t.domain_too_small);
}

TEST(Run, StochasticNeedsNoiseModel) {
  const HarmonicWell w;
  IntegratorConfig cfg = w.cfg();
  cfg.scheme = Scheme::stochastic_quantum;
  EXPECT_THROW(run(w.ground(), w.potential, w.params.mass, std::nullopt, cfg, cfg.dt, 1), ValidationError);
}

TEST(Run, SameSeedSameTrajectory) {
  const HarmonicWell w;
  IntegratorConfig cfg = w.cfg();
  cfg.scheme = Scheme::stochastic_quantum;
  const NoiseModel m = NoiseModel::make(w.params.mass, 1.0, 1e34, true);
  const Trajectory a = run(w.ground(), w.potential, w.params.mass, m, cfg, 50 * cfg.dt, 10, 99);
  const Trajectory b = run(w.ground(), w.potential, w.params.mass, m, cfg, 50 * cfg.dt, 10, 99);
  const Trajectory c = run(w.ground(), w.potential, w.params.mass, m, cfg, 50 * cfg.dt, 10, 100);
  ASSERT_EQ(a.snapshots.size(), b.snapshots.size());
  for (std::size_t k = 0; k < a.snapshots.size(); ++k) {
    EXPECT_EQ(a.snapshots[k].observables.variance, b.snapshots[k].observables.variance);
  }
  EXPECT_NE(a.snapshots.back().observables.variance, c.snapshots.back().observables.variance);
}
