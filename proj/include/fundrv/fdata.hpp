#pragma once

#include "fundrv/basis.hpp"

#include <Eigen/Dense>

#include <span>
#include <utility>

namespace fundrv {

/// n curves on [0, 1] stored as basis coefficients: row i of `coef` holds the
/// coefficients of X_i, so X_i(t) = sum_j coef(i, j) phi_j(t).
struct FunctionalSample {
  Basis basis;
  Eigen::MatrixXd coef;
  // Number of projected derivatives applied so far.
  int deriv_order = 0;

  Eigen::Index size() const noexcept { return coef.rows(); }

  // Subset of curves, in the order given.
  FunctionalSample rows(std::span<const std::size_t> index) const;
};

// Checks the sample invariants (n >= 1, column count, finite entries).
void validate(const FunctionalSample& x);

/// Least-squares projection of gridded curves onto `basis`.
///
/// `values` is n x m with column p observed at grid[p]. With roughness > 0
/// the fit adds roughness * c' P c (second-derivative penalty); the default
/// is an unpenalized projection. Throws RankError when m < K or when the
/// evaluation matrix is rank deficient.
FunctionalSample project(std::span<const double> grid, const Eigen::MatrixXd& values, const Basis& basis,
                         double roughness = 0.0);

// L2 projection of X_i' back onto the same basis:
// coef_new = coef * D^T, D = G00^{-1} G01.
FunctionalSample derivative(const FunctionalSample& x);

// Applies `derivative` k times.
FunctionalSample derivative(const FunctionalSample& x, int k);

// Curve values at the given points (n x |points|); deriv > 0 uses the
// analytic derivative of the stored representation.
Eigen::MatrixXd evaluate(const FunctionalSample& x, std::span<const double> points, int deriv = 0);

// (X_i(0), X_i(1)) for every curve.
std::pair<Eigen::VectorXd, Eigen::VectorXd> endpoints(const FunctionalSample& x);

// Z(i, j) = integral of X_i(t) phi_j(t) dt for phi in coef_basis.
Eigen::MatrixXd design_inner_products(const FunctionalSample& x, const Basis& coef_basis);

// Z(i, j) = integral of X_i^(deriv)(t) phi_j(t) dt using the exact
// derivative of the stored representation (no re-projection).
Eigen::MatrixXd analytic_inner_products(const FunctionalSample& x, const Basis& coef_basis, int deriv);

}  // namespace fundrv
