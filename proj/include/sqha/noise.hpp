#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstdint>
#include <mutex>
#include <optional>
#include <random>
#include <vector>

#include "sqha/constants.hpp"
#include "sqha/error.hpp"
#include "sqha/field.hpp"
#include "sqha/numerics.hpp"
#include "sqha/scales.hpp"

namespace sqha {

/// Spatially correlated, time-white density noise. Equal-time covariance
/// density: amplitude * exp(-(lambda / lambda_c)^2), with
/// amplitude = mu * 8 m (k_B Theta)^2 / (pi^3 hbar^2).
struct NoiseModel {
  double theta = 0.0;        // K
  double lambda_c = infinite_length;
  double mobility_mu = 1.0;  // config scalar
  double mass = 0.0;         // kg
  bool conserving = true;

  /// lambda_c from the correlation-length formula unless overridden.
  static NoiseModel make(double mass, double theta, double mobility_mu = 1.0,
                         bool conserving = true,
                         std::optional<double> lambda_c_override = std::nullopt) {
    NoiseModel m;
    m.mass = mass;
    m.theta = theta;
    m.mobility_mu = mobility_mu;
    m.conserving = conserving;
    m.lambda_c = lambda_c_override ? *lambda_c_override : correlation_length(mass, theta);
    m.validate();
    return m;
  }

  double amplitude() const {
    const double kt = codata.k_B * theta;
    return mobility_mu * 8.0 * mass * kt * kt / (pi * pi * pi * codata.hbar * codata.hbar);
  }

  void validate() const {
    if (!(mass > 0.0)) throw ValidationError("noise mass must be positive");
    if (!(theta >= 0.0)) throw ValidationError("theta must be ≥ 0");
    if (!(mobility_mu > 0.0)) throw ValidationError("mobility_mu must be positive");
    if (!(lambda_c > 0.0)) throw ValidationError("lambda_c must be positive");
  }
};

inline double covariance(const NoiseModel& m, double separation) {
  const double a = m.amplitude();
  if (a == 0.0) return 0.0;
  if (std::isinf(m.lambda_c)) return a;
  const double s = separation / m.lambda_c;
  return a * std::exp(-s * s);
}

/// Seeded source of standard normal deviates. Equal seeds give equal
/// sequences on one platform.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t draws() const { return counter_; }

  double normal() {
    ++counter_;
    return normal_(engine_);
  }

  /// Independent child stream for ensemble member `index`.
  RandomStream split(std::uint64_t index) const {
    std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      0x5eedu};
    std::uint64_t s = 0;
    std::vector<std::uint32_t> out(2);
    seq.generate(out.begin(), out.end());
    s = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
    return RandomStream(s);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uint64_t counter_ = 0;
};

namespace detail {
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

/// Samples the stationary Gaussian field exactly by circulant embedding: the
/// grid is extended periodically by at least 8 lambda_c, the kernel's
/// circulant eigenvalues come from one FFT, and each sample is one FFT of
/// scaled complex white noise.
class CorrelatedFieldSampler {
 public:
  CorrelatedFieldSampler(const NoiseModel& model, const Grid& grid) : model_(model), grid_(grid) {
    model.validate();
    const double h = grid.spacing();
    amplitude_ = model.amplitude();
    if (amplitude_ == 0.0) return;
    if (!(h < 0.5 * model.lambda_c)) {
      throw ValidationError("under-resolved kernel: grid spacing must be below lambda_c / 2");
    }
    const double pad = std::ceil(8.0 * model.lambda_c / h);
    std::size_t m = 1;
    while (static_cast<double>(m) < static_cast<double>(grid.size()) + pad) m <<= 1;
    size_ = m;

    std::vector<std::complex<double>> row(m), eig(m);
    for (std::size_t j = 0; j < m; ++j) {
      const double d = static_cast<double>(std::min(j, m - j)) * h;
      row[j] = covariance(model, d);
    }
    {
      std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
      plan_ = fftw_plan_dft_1d(static_cast<int>(m), reinterpret_cast<fftw_complex*>(row.data()),
                               reinterpret_cast<fftw_complex*>(eig.data()), FFTW_FORWARD,
                               FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    if (!plan_) throw NumericalError("FFT plan creation failed");
    fftw_execute_dft(plan_, reinterpret_cast<fftw_complex*>(row.data()),
                     reinterpret_cast<fftw_complex*>(eig.data()));
    scale_.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
      scale_[k] = std::sqrt(std::max(0.0, eig[k].real()) / static_cast<double>(m));
    }
  }

  CorrelatedFieldSampler(const CorrelatedFieldSampler&) = delete;
  CorrelatedFieldSampler& operator=(const CorrelatedFieldSampler&) = delete;

  ~CorrelatedFieldSampler() {
    if (plan_) {
      std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
      fftw_destroy_plan(plan_);
    }
  }

  const NoiseModel& model() const { return model_; }
  std::size_t embedding_size() const { return size_; }

  /// One field with unit time density (the integrator scales by sqrt(dt)).
  Field sample(RandomStream& stream) const {
    const std::size_t n = grid_.size();
    std::vector<double> out(n, 0.0);
    if (amplitude_ != 0.0) {
      std::vector<std::complex<double>> in(size_), res(size_);
      for (std::size_t k = 0; k < size_; ++k) {
        const double re = stream.normal();
        const double im = stream.normal();
        in[k] = {scale_[k] * re, scale_[k] * im};
      }
      fftw_execute_dft(plan_, reinterpret_cast<fftw_complex*>(in.data()),
                       reinterpret_cast<fftw_complex*>(res.data()));
      for (std::size_t i = 0; i < n; ++i) out[i] = res[i].real();
      if (model_.conserving) {
        const double mean = kernels::integrate(out, grid_.spacing(), Boundary::one_sided) /
                            grid_.length();
        for (double& x : out) x -= mean;
      }
    }
    return Field(grid_, std::move(out), units::density_rate);
  }

 private:
  NoiseModel model_;
  Grid grid_;
  double amplitude_ = 0.0;
  std::size_t size_ = 0;
  fftw_plan plan_ = nullptr;
  std::vector<double> scale_;
};

inline Field sample_field(const NoiseModel& model, const Grid& grid, RandomStream& stream) {
  return CorrelatedFieldSampler(model, grid).sample(stream);
}

/// Empirical covariance <eta(q) eta(q + lag)> averaged over samples and over
/// all point pairs at each requested lag (in grid cells).
struct CovarianceEstimate {
  std::vector<std::size_t> lag_cells;
  std::vector<double> lags;       // m
  std::vector<double> empirical;
  std::vector<double> target;
  std::size_t samples = 0;
};

inline CovarianceEstimate estimate_covariance(const CorrelatedFieldSampler& sampler,
                                              const Grid& grid, RandomStream& stream,
                                              std::size_t samples,
                                              const std::vector<std::size_t>& lag_cells) {
  if (samples == 0) throw ValidationError("covariance audit needs at least one sample");
  CovarianceEstimate est;
  est.lag_cells = lag_cells;
  est.samples = samples;
  std::vector<double> acc(lag_cells.size(), 0.0);
  const std::size_t n = grid.size();
  for (std::size_t l : lag_cells) {
    if (l >= n) throw ValidationError("covariance lag exceeds the grid");
  }
  for (std::size_t s = 0; s < samples; ++s) {
    const Field f = sampler.sample(stream);
    for (std::size_t k = 0; k < lag_cells.size(); ++k) {
      const std::size_t l = lag_cells[k];
      double sum = 0.0;
      for (std::size_t i = 0; i + l < n; ++i) sum += f[i] * f[i + l];
      acc[k] += sum / static_cast<double>(n - l);
    }
  }
  for (std::size_t k = 0; k < lag_cells.size(); ++k) {
    const double lag = static_cast<double>(lag_cells[k]) * grid.spacing();
    est.lags.push_back(lag);
    est.empirical.push_back(acc[k] / static_cast<double>(samples));
    est.target.push_back(covariance(sampler.model(), lag));
  }
  return est;
}

}  // namespace sqha
