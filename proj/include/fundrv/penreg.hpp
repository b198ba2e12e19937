#pragma once

#include "fundrv/basis.hpp"
#include "fundrv/fdata.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fundrv {

enum class Endpoint { Left, Right };

// Scalar regressor X^(deriv)(0) or X^(deriv)(1).
struct PointImpact {
  int deriv = 0;
  Endpoint end = Endpoint::Left;

  bool operator==(const PointImpact&) const = default;
};

enum class ColumnRole { Intercept, Scalar, Impact, Functional };

struct ColumnLabel {
  ColumnRole role = ColumnRole::Intercept;
  // Impact columns: derivative order and endpoint.
  int deriv = 0;
  Endpoint end = Endpoint::Left;
  // Scalar columns: covariate index; functional columns: basis index.
  std::size_t index = 0;
  std::string name;
};

/// Recipe for an augmented design: columns appear as
///   [1 | scalars | impacts (in the listed order) | functional block].
struct DesignSpec {
  Basis coef_basis;
  int functional_deriv = 0;
  std::vector<PointImpact> impacts;
  std::optional<Eigen::MatrixXd> scalars;
  std::vector<std::string> scalar_names;
};

struct AugmentedDesign {
  Eigen::MatrixXd Zt;  // n x p
  Eigen::MatrixXd Pt;  // p x p, zero outside the functional block
  std::vector<ColumnLabel> labels;
  // Factor with Pt = penalty_root * penalty_root^T (p x rank(P)).
  Eigen::MatrixXd penalty_root;

  Eigen::Index n() const noexcept { return Zt.rows(); }
  Eigen::Index p() const noexcept { return Zt.cols(); }

  // Wraps raw matrices; labels default to intercept/functional placeholders.
  static AugmentedDesign from_matrices(Eigen::MatrixXd zt, Eigen::MatrixXd pt, std::vector<ColumnLabel> labels = {});
};

/// Builds the augmented design. The functional block integrates the
/// functional_deriv-times projected derivative of x against coef_basis;
/// impact columns evaluate the projected derivative of the given order at
/// the endpoint. Throws EstimabilityError if an impact column is constant
/// or collinear with another impact column.
AugmentedDesign assemble(const Eigen::VectorXd& y, const FunctionalSample& x, const DesignSpec& spec);

struct PenalizedFit {
  Eigen::VectorXd gt;
  double lambda = 0.0;
  double df = 0.0;
  double sigma2_hat = 0.0;
  double rss = 0.0;
  Eigen::VectorXd hat_diag;
  Eigen::VectorXd fitted;
  // (Z'Z + lambda P)^{-1}
  Eigen::MatrixXd A_inv;
  // (Z'Z + lambda P)^{-1} Z', maps responses to coefficients.
  Eigen::MatrixXd coef_map;
  // A_inv Z'Z A_inv
  Eigen::MatrixXd sandwich;
};

// Smallest lambda used when an exactly singular design needs regularizing.
inline constexpr double kLambdaFloor = 1e-11;

/// Penalized least squares g = (Z'Z + lambda P)^{-1} Z'y, solved through a
/// column-pivoted QR of the stacked matrix [Z; sqrt(lambda) R'] with
/// P = R R'. Throws SingularSystemError when the system is rank deficient at
/// this lambda; the error carries the smallest viable lambda on the ladder
/// 1e-11, 1e-10, ..., 1e2.
PenalizedFit fit(const AugmentedDesign& d, const Eigen::VectorXd& y, double lambda);

// 14 log-spaced values 1e-11, ..., 1e2.
std::vector<double> default_lambda_grid();

enum class CvCriterion { Ordinary, Generalized };

struct OcvResult {
  double lambda_star = 0.0;
  std::vector<double> scores;
};

/// Leave-one-out score sum_i ((y_i - yhat_i) / (1 - h_ii))^2 for each lambda
/// in the grid (or GCV n * rss / (n - df)^2). Singular fits and leverages at
/// 1 score +inf. Ties resolve to the smaller lambda.
OcvResult ocv(const AugmentedDesign& d, const Eigen::VectorXd& y, std::span<const double> lambda_grid,
              CvCriterion criterion = CvCriterion::Ordinary);

}  // namespace fundrv
