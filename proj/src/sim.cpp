#include "fundrv/sim.hpp"

#include "fundrv/parallel.hpp"
#include "fundrv/rng.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

namespace fundrv {

namespace {

constexpr std::uint32_t kCovariateStream = 1;
constexpr std::uint32_t kNoiseStream = 2;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> sim_grid() {
  std::vector<double> g(kSimGridPoints);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<double>(i) / static_cast<double>(g.size() - 1);
  return g;
}

}  // namespace

Eigen::MatrixXd covariate_values(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("need at least one curve");
  const std::vector<double> t = sim_grid();
  constexpr double two_pi = 2.0 * std::numbers::pi;
  Eigen::MatrixXd v(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(t.size()));
  for (std::size_t i = 0; i < n; ++i) {
    RandomStream rs(seed, kCovariateStream, static_cast<std::uint32_t>(i));
    const double d0 = rs.normal(), d1 = rs.normal(), d2 = rs.normal();
    double f[13], g[13];
    for (int k = 1; k <= 12; ++k) {
      f[k] = rs.normal() * std::exp(std::min(-(k - 1.5), 0.0));
      g[k] = rs.normal() * std::exp(-(k - 1.0));
    }
    for (std::size_t p = 0; p < t.size(); ++p) {
      double x = d0 + d1 * (t[p] - 0.5) / 2.0 + d2 / 2.0 * std::exp(t[p] - 0.5);
      for (int k = 1; k <= 12; ++k) x += f[k] * std::sin(two_pi * k * t[p]) + g[k] * std::cos(two_pi * k * t[p]);
      v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) = x;
    }
  }
  return v;
}

FunctionalSample gen_covariates(std::size_t n, std::uint64_t seed) {
  return project(sim_grid(), covariate_values(n, seed), make_bspline(6, 21));
}

Eigen::VectorXd beta_coefficients(double beta0_sim) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(8);
  b[0] = beta0_sim;
  b[2] = 0.5;
  b[4] = 0.3;
  b[6] = 0.1;
  return b;
}

Eigen::VectorXd response_signal(const FunctionalSample& x, double beta0_sim) {
  return analytic_inner_products(x, make_fourier_plus_linear(3), 1) * beta_coefficients(beta0_sim);
}

Eigen::VectorXd gen_response(const FunctionalSample& x, double beta0_sim, double noise_sd, std::uint64_t seed,
                             std::uint32_t rep) {
  if (!(noise_sd >= 0.0)) throw std::invalid_argument("noise_sd must be nonnegative");
  Eigen::VectorXd y = response_signal(x, beta0_sim);
  RandomStream rs(seed, kNoiseStream, rep);
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += noise_sd * rs.normal();
  return y;
}

std::string PowerTable::csv_header() { return "test_kind,lambda_policy,beta0,reject1,reject2,correct,reps,seed\n"; }

std::string PowerTable::to_csv() const {
  std::string out = csv_header();
  for (const PowerRow& r : rows) {
    out += to_string(r.test_kind) + "," + r.lambda_policy + "," + fmt(r.beta0) + "," + fmt(r.reject1) + "," +
           fmt(r.reject2) + "," + fmt(r.correct) + "," + std::to_string(r.reps) + "," + std::to_string(r.seed) +
           "\n";
  }
  return out;
}

std::string describe(const LambdaPolicy& policy) {
  if (policy.kind == LambdaPolicy::Kind::OCV) return "ocv";
  char buf[40];
  std::snprintf(buf, sizeof buf, "fixed:%g", policy.lambda);
  return buf;
}

PowerTable power_study(const SimConfig& cfg, TestKind kind) {
  if (cfg.reps < 1) throw std::invalid_argument("reps must be at least 1");
  if (!(cfg.noise_sd > 0.0)) throw std::invalid_argument("noise_sd must be positive");
  if (cfg.beta0_grid.empty()) throw std::invalid_argument("beta0 grid is empty");
  const FunctionalSample x = gen_covariates(cfg.n, cfg.seed);
  const auto n = static_cast<Eigen::Index>(cfg.n);
  const AugmentedDesign d = assemble(Eigen::VectorXd::Zero(n), x, design_spec(kind, cfg.coef_basis));

  // Signal is affine in beta0: base + beta0 * unit.
  const Eigen::VectorXd base = response_signal(x, 0.0);
  const Eigen::VectorXd unit = response_signal(x, 1.0) - base;
  Eigen::MatrixXd noise(n, static_cast<Eigen::Index>(cfg.reps));
  for (std::size_t r = 0; r < cfg.reps; ++r) {
    RandomStream rs(cfg.seed, kNoiseStream, static_cast<std::uint32_t>(r));
    for (Eigen::Index i = 0; i < n; ++i) noise(i, static_cast<Eigen::Index>(r)) = cfg.noise_sd * rs.normal();
  }

  enum Outcome : signed char { kFailed = -1, kNone = 0, kReject1 = 1, kReject2 = 2 };
  const std::size_t cells = cfg.beta0_grid.size() * cfg.reps;
  std::vector<signed char> outcome(cells, kNone);
  parallel_for(cells, cfg.threads, [&](std::size_t cell) {
    const std::size_t b = cell / cfg.reps;
    const auto r = static_cast<Eigen::Index>(cell % cfg.reps);
    const Eigen::VectorXd y = base + cfg.beta0_grid[b] * unit + noise.col(r);
    try {
      const DerivativeTestReport rep = run_test(d, y, kind, cfg.coef_basis, cfg.lambda_policy, cfg.level);
      signed char o = kNone;
      if (rep.stage1.p_value < cfg.level) o |= kReject1;
      if (rep.stage2.p_value < cfg.level) o |= kReject2;
      outcome[cell] = o;
    } catch (const std::exception&) {
      outcome[cell] = kFailed;
    }
  });

  PowerTable table;
  for (std::size_t b = 0; b < cfg.beta0_grid.size(); ++b) {
    PowerRow row{kind, describe(cfg.lambda_policy), cfg.beta0_grid[b], 0, 0, 0, cfg.reps, cfg.seed, 0};
    std::size_t r1 = 0, r2 = 0, ok = 0;
    for (std::size_t r = 0; r < cfg.reps; ++r) {
      const signed char o = outcome[b * cfg.reps + r];
      if (o == kFailed) {
        ++row.failures;
        continue;
      }
      r1 += (o & kReject1) != 0;
      r2 += (o & kReject2) != 0;
      ok += (o & kReject1) && !(o & kReject2);
    }
    const std::size_t done = cfg.reps - row.failures;
    if (done > 0) {
      row.reject1 = static_cast<double>(r1) / static_cast<double>(done);
      row.reject2 = static_cast<double>(r2) / static_cast<double>(done);
      row.correct = static_cast<double>(ok) / static_cast<double>(done);
    } else {
      row.reject1 = row.reject2 = row.correct = std::nan("");
    }
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace fundrv
