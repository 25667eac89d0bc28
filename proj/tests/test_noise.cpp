#include <gtest/gtest.h>

#include <cmath>

#include "sqha/sqha.hpp"

using namespace sqha;

namespace {

constexpr double mass = 6.6465e-27;

NoiseModel model(double theta, bool conserving = false) {
  return NoiseModel::make(mass, theta, 1.0, conserving);
}

Grid audit_grid(const NoiseModel& m, std::size_t n = 1024) {
  const double h = m.lambda_c / 4.0;
  return make_grid(0.0, h * static_cast<double>(n - 1), n);
}

}  // namespace

TEST(Covariance, ZeroLagAmplitude) {
  const NoiseModel m = model(2.17);
  const double kt = 1.380649e-23 * 2.17;
  const double oracle = 8.0 * mass * kt * kt /
                        (std::pow(std::acos(-1.0), 3) * 1.054571817e-34 * 1.054571817e-34);
  EXPECT_NEAR(covariance(m, 0.0) / oracle, 1.0, 1e-14);
}

TEST(Covariance, ShapeAndMobility) {
  const NoiseModel m = model(2.17);
  EXPECT_NEAR(covariance(m, m.lambda_c) / covariance(m, 0.0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(covariance(m, -2.0 * m.lambda_c) / covariance(m, 0.0), std::exp(-4.0), 1e-15);
  const NoiseModel m3 = NoiseModel::make(mass, 2.17, 3.0);
  EXPECT_NEAR(covariance(m3, 0.0) / covariance(m, 0.0), 3.0, 1e-14);
}

TEST(Covariance, ZeroThetaIsSilent) {
  const NoiseModel m = NoiseModel::make(mass, 0.0, 1.0, true, 1e-10);
  EXPECT_EQ(covariance(m, 0.0), 0.0);
  const Grid g = make_grid(0.0, 1e-9, 64);
  RandomStream s(1);
  const Field f = sample_field(m, g, s);
  EXPECT_EQ(f.max_abs(), 0.0);
}

TEST(Covariance, ThetaSquaredScaling) {
  const double lc = 3e-10;
  const NoiseModel a = NoiseModel::make(mass, 1.0, 1.0, true, lc);
  const NoiseModel b = NoiseModel::make(mass, 3.0, 1.0, true, lc);
  EXPECT_NEAR(covariance(b, 0.5 * lc) / covariance(a, 0.5 * lc), 9.0, 1e-12);
  // With lambda_c following Theta, the length scales as Theta^-1/2.
  EXPECT_NEAR(model(1.0).lambda_c / model(4.0).lambda_c, 2.0, 1e-13);
}

TEST(Sampler, SameSeedSameField) {
  const NoiseModel m = model(2.17);
  const Grid g = audit_grid(m, 256);
  const CorrelatedFieldSampler sampler(m, g);
  RandomStream s1(42), s2(42), s3(43);
  const Field a = sampler.sample(s1);
  const Field b = sampler.sample(s2);
  const Field c = sampler.sample(s3);
  EXPECT_EQ(a.data(), b.data());
  EXPECT_NE(a.data(), c.data());
}

TEST(Sampler, SplitStreamsAreDistinctAndStable) {
  const RandomStream root(7);
  RandomStream a = root.split(0), b = root.split(1), a2 = root.split(0);
  EXPECT_EQ(a.seed(), a2.seed());
  EXPECT_NE(a.seed(), b.seed());
  EXPECT_EQ(a.normal(), a2.normal());
}

TEST(Sampler, UnderResolvedKernel) {
  const NoiseModel m = model(2.17);
  const Grid g = make_grid(0.0, 100.0 * m.lambda_c, 64);
  try {
    CorrelatedFieldSampler s(m, g);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("under-resolved kernel"), std::string::npos);
  }
}

TEST(Sampler, ConservingFieldsIntegrateToZero) {
  const NoiseModel m = model(2.17, true);
  const Grid g = audit_grid(m, 512);
  const CorrelatedFieldSampler sampler(m, g);
  RandomStream s(9);
  for (int i = 0; i < 20; ++i) {
    const Field f = sampler.sample(s);
    double rms = 0.0;
    for (double x : f.values()) rms += x * x;
    rms = std::sqrt(rms / static_cast<double>(f.size()));
    EXPECT_LT(std::abs(integrate(f)) / (rms * g.length()), 1e-12);
  }
}

TEST(Sampler, EmpiricalCovarianceMatchesKernel) {
  const NoiseModel m = model(2.17);
  const Grid g = audit_grid(m, 1024);
  const CorrelatedFieldSampler sampler(m, g);
  RandomStream s(2024);
  const std::size_t samples = 4000;
  const CovarianceEstimate est = estimate_covariance(sampler, g, s, samples, {0, 4, 8});
  // Standard error of a lag product averaged over N points and S samples of a
  // Gaussian field: amp * sqrt(sum_j rho_j^2 / (N S)) away from lag 0.
  double sum_rho2 = 0.0;
  for (int j = -64; j <= 64; ++j) sum_rho2 += std::exp(-2.0 * std::pow(j * g.spacing() / m.lambda_c, 2));
  const double se = covariance(m, 0.0) *
                    std::sqrt(2.0 * sum_rho2 / (static_cast<double>(g.size()) * static_cast<double>(samples)));
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_NEAR(est.empirical[k], est.target[k], std::max(0.05 * est.target[k], 4.0 * se))
        << "lag " << est.lags[k];
  }
  // Lags 0 and lambda_c are inside 5% at this sample count.
  EXPECT_LT(4.0 * se, 0.05 * est.target[1]);
  EXPECT_GT(est.empirical[0], est.empirical[1]);
  EXPECT_GT(est.empirical[1], est.empirical[2]);
}

TEST(Sampler, EmpiricalCovarianceIsSymmetric) {
  // At a fixed point, correlations with the left and right neighbour at the
  // same distance agree within sampling error.
  const NoiseModel m = model(2.17);
  const Grid g = audit_grid(m, 256);
  const CorrelatedFieldSampler sampler(m, g);
  RandomStream s(5);
  const std::size_t c = 128, l = 4;
  const int samples = 4000;
  double right = 0.0, left = 0.0;
  for (int k = 0; k < samples; ++k) {
    const Field f = sampler.sample(s);
    right += f[c] * f[c + l];
    left += f[c] * f[c - l];
  }
  EXPECT_NEAR((right - left) / samples / covariance(m, 0.0), 0.0, 0.06);
}

TEST(Sampler, ProjectionChangesCovarianceOnlySlightly) {
  const NoiseModel raw = model(2.17, false);
  const NoiseModel proj = model(2.17, true);
  const Grid g = audit_grid(raw, 1024);  // 256 lambda_c
  ASSERT_GE(g.length(), 50.0 * raw.lambda_c);
  const CorrelatedFieldSampler a(raw, g), b(proj, g);
  RandomStream s1(77), s2(77);
  const CovarianceEstimate ea = estimate_covariance(a, g, s1, 1000, {0, 4});
  const CovarianceEstimate eb = estimate_covariance(b, g, s2, 1000, {0, 4});
  for (std::size_t k = 0; k < 2; ++k) {
    // Same random draws, so the difference is the projection alone.
    EXPECT_LT(std::abs(ea.empirical[k] - eb.empirical[k]) / ea.target[0],
              5.0 * raw.lambda_c / g.length());
  }
}

TEST(NoiseModel, Validation) {
  EXPECT_THROW(NoiseModel::make(mass, -1.0), ValidationError);
  EXPECT_THROW(NoiseModel::make(mass, 1.0, 0.0), ValidationError);
  EXPECT_THROW(NoiseModel::make(-mass, 1.0), ValidationError);
}
