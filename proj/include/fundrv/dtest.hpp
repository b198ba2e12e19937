#pragma once

#include "fundrv/basis.hpp"
#include "fundrv/fdata.hpp"
#include "fundrv/penreg.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace fundrv {

/// Which pair of derivative orders is compared. The first order named is
/// the null model, the second the alternative.
enum class TestKind { ZeroVsFirst, FirstVsZero, ZeroVsSecond };

// "0v1", "1v0", "0v2".
std::string to_string(TestKind kind);
TestKind parse_test_kind(const std::string& s);

struct ContrastMatrix {
  Eigen::MatrixXd C;
  std::string description;

  Eigen::Index p_C() const noexcept { return C.rows(); }
};

struct ContrastResult {
  double F = 0.0;
  Eigen::Index p_C = 0;
  double df2 = 0.0;
  double eta = 0.0;
  double p_value = 1.0;
  double p_value_central = 1.0;
  double lambda_used = 0.0;
};

enum class Decision { KeepNull, SwitchToAlternative, NeitherAdequate };

std::string to_string(Decision d);

// KeepNull unless stage 1 rejects; NeitherAdequate if both reject.
Decision decide(double p_stage1, double p_stage2, double level);

struct LambdaPolicy {
  enum class Kind { Fixed, OCV };
  Kind kind = Kind::Fixed;
  double lambda = kLambdaFloor;
  std::vector<double> grid = default_lambda_grid();

  static LambdaPolicy fixed(double lambda) { return {Kind::Fixed, lambda, {}}; }
  static LambdaPolicy cross_validated(std::vector<double> grid = default_lambda_grid()) {
    return {Kind::OCV, 0.0, std::move(grid)};
  }
};

struct DerivativeTestReport {
  TestKind test_kind = TestKind::ZeroVsFirst;
  double lambda = 0.0;
  double level = 0.05;
  double df = 0.0;
  ContrastResult stage1;
  ContrastResult stage2;
  Decision decision = Decision::KeepNull;
  std::optional<OcvResult> ocv;
};

/// Design recipe for a test:
///   ZeroVsFirst  [1 | s | X(0) X(1) | int X g]
///   FirstVsZero  [1 | s | X(1) | int X' g]
///   ZeroVsSecond [1 | s | X'(0) X'(1) X(0) X(1) | int X g]
DesignSpec design_spec(TestKind kind, const Basis& coef_basis, std::optional<Eigen::MatrixXd> scalars = std::nullopt,
                       std::vector<std::string> scalar_names = {});

/// Stage-1 (point impacts vanish) and stage-2 (integration-by-parts
/// constraints hold) contrasts for a design built by design_spec. p is the
/// design column count; scalar covariates are inferred from it.
std::pair<ContrastMatrix, ContrastMatrix> contrasts(TestKind kind, const Basis& coef_basis, Eigen::Index p);

/// F = (C g)' (C V C')^{-1} (C g) / (p_C sigma2) with V the sandwich matrix.
/// F is 0 when C g vanishes exactly. Throws SingularContrastError when
/// C V C' is not invertible.
double f_statistic(const PenalizedFit& fit, const ContrastMatrix& c);

struct Noncentrality {
  double eta = 0.0;
  // True when Z'Z was singular and the projection step used the ridge floor.
  bool ridge_floor_used = false;
};

/// Smoothing-bias correction: refit at the floor lambda, project the fitted
/// values onto the null space of C, refit those at lambda and measure the
/// contrast they still carry, scaled by the floor-lambda variance.
Noncentrality noncentrality(const AugmentedDesign& d, const Eigen::VectorXd& y, const ContrastMatrix& c,
                            double lambda);

/// Upper tail P(F' > f) of the noncentral F(df1, df2, eta), summed as a
/// Poisson(eta / 2) mixture of regularized incomplete beta tails until the
/// remaining Poisson mass is below 1e-12.
double noncentral_f_pvalue(double f, double df1, double df2, double eta);

ContrastResult evaluate_contrast(const AugmentedDesign& d, const Eigen::VectorXd& y, const PenalizedFit& fit,
                                 const ContrastMatrix& c);

/// Both stages on an already assembled design.
DerivativeTestReport run_test(const AugmentedDesign& d, const Eigen::VectorXd& y, TestKind kind,
                              const Basis& coef_basis, const LambdaPolicy& policy, double level = 0.05);

/// Assembles the design for kind and runs both stages.
DerivativeTestReport run_test(const Eigen::VectorXd& y, const FunctionalSample& x, TestKind kind,
                              const std::optional<Eigen::MatrixXd>& scalars, const Basis& coef_basis,
                              const LambdaPolicy& policy, double level = 0.05);

}  // namespace fundrv
