#pragma once

#include "fundrv/basis.hpp"
#include "fundrv/dtest.hpp"
#include "fundrv/fdata.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace fundrv {

inline constexpr std::size_t kSimGridPoints = 201;

/// Random curves d0 + d1 (t - 1/2) / 2 + (d2 / 2) e^(t - 1/2)
///   + sum_{k=1..12} f_k e^min(-(k - 3/2), 0) sin(2 pi k t) + g_k e^-(k - 1) cos(2 pi k t)
/// with i.i.d. standard normal coefficients, sampled on a 201-point grid and
/// projected onto order-6 B-splines with 21 knots.
FunctionalSample gen_covariates(std::size_t n, std::uint64_t seed);

// Raw grid values of the curves gen_covariates projects (n x 201).
Eigen::MatrixXd covariate_values(std::size_t n, std::uint64_t seed);

// Fourier coefficients (3 pairs) of beta(t) = beta0 + 0.5 sin 2 pi t + 0.3 sin 4 pi t + 0.1 sin 6 pi t.
Eigen::VectorXd beta_coefficients(double beta0_sim);

// Noise-free responses, integral of beta X' computed from the exact curve derivative.
Eigen::VectorXd response_signal(const FunctionalSample& x, double beta0_sim);

/// response_signal plus N(0, noise_sd^2) noise from substream `rep`.
Eigen::VectorXd gen_response(const FunctionalSample& x, double beta0_sim, double noise_sd, std::uint64_t seed,
                             std::uint32_t rep = 0);

struct SimConfig {
  std::size_t n = 100;
  std::size_t reps = 500;
  std::vector<double> beta0_grid{0.0};
  double noise_sd = 0.1;
  std::uint64_t seed = 1;
  LambdaPolicy lambda_policy = LambdaPolicy::fixed(kLambdaFloor);
  double level = 0.05;
  Basis coef_basis = make_fourier_plus_linear(12);
  unsigned threads = 1;
};

struct PowerRow {
  TestKind test_kind = TestKind::ZeroVsFirst;
  std::string lambda_policy;
  double beta0 = 0.0;
  double reject1 = 0.0;
  double reject2 = 0.0;
  double correct = 0.0;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  // Replications that threw; rates are over the remaining ones.
  std::size_t failures = 0;
};

struct PowerTable {
  std::vector<PowerRow> rows;

  static std::string csv_header();
  std::string to_csv() const;
};

std::string describe(const LambdaPolicy& policy);

/// Rejection rates over cfg.beta0_grid. One covariate sample is reused;
/// replication r draws its noise from substream r, so every beta0 value sees
/// the same noise and results do not depend on cfg.threads.
PowerTable power_study(const SimConfig& cfg, TestKind kind);

}  // namespace fundrv
