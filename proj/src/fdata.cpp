#include "fundrv/fdata.hpp"

#include "fundrv/errors.hpp"

#include <stdexcept>
#include <string>

namespace fundrv {

FunctionalSample FunctionalSample::rows(std::span<const std::size_t> index) const {
  FunctionalSample out{basis, Eigen::MatrixXd(static_cast<Eigen::Index>(index.size()), coef.cols()), deriv_order};
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (static_cast<Eigen::Index>(index[r]) >= coef.rows()) throw std::out_of_range("curve index out of range");
    out.coef.row(static_cast<Eigen::Index>(r)) = coef.row(static_cast<Eigen::Index>(index[r]));
  }
  return out;
}

void validate(const FunctionalSample& x) {
  if (x.coef.rows() < 1) throw std::invalid_argument("functional sample needs at least one curve");
  if (x.coef.cols() != static_cast<Eigen::Index>(x.basis.size())) {
    throw std::invalid_argument("coefficient matrix has " + std::to_string(x.coef.cols()) +
                                " columns, basis has " + std::to_string(x.basis.size()));
  }
  if (!x.coef.allFinite()) throw std::invalid_argument("functional sample has non-finite coefficients");
}

FunctionalSample project(std::span<const double> grid, const Eigen::MatrixXd& values, const Basis& basis,
                         double roughness) {
  const auto m = static_cast<Eigen::Index>(grid.size());
  const auto k = static_cast<Eigen::Index>(basis.size());
  if (values.cols() != m) throw std::invalid_argument("values has a different column count than grid");
  if (m < k) {
    throw RankError("projection underdetermined: " + std::to_string(m) + " grid points for " + std::to_string(k) +
                    " basis functions");
  }
  for (Eigen::Index p = 1; p < m; ++p) {
    if (!(grid[p] > grid[p - 1])) throw std::invalid_argument("projection grid must be strictly increasing");
  }
  if (!values.allFinite()) throw std::invalid_argument("projection values must be finite");

  const Eigen::MatrixXd e = eval(basis, grid, 0);
  FunctionalSample out{basis, Eigen::MatrixXd(values.rows(), k), 0};
  if (roughness > 0.0) {
    const Eigen::MatrixXd a = e.transpose() * e + roughness * penalty_matrix(basis);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) throw RankError("penalized projection is singular");
    out.coef = ldlt.solve(e.transpose() * values.transpose()).transpose();
    return out;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(e);
  qr.setThreshold(1e-12);
  if (qr.rank() < k) {
    throw RankError("basis evaluation matrix has rank " + std::to_string(qr.rank()) + " < " + std::to_string(k));
  }
  out.coef = qr.solve(values.transpose()).transpose();
  return out;
}

FunctionalSample derivative(const FunctionalSample& x) {
  const Eigen::MatrixXd g00 = gram(x.basis, x.basis, 0, 0);
  const Eigen::MatrixXd g01 = gram(x.basis, x.basis, 0, 1);
  Eigen::LLT<Eigen::MatrixXd> llt(g00);
  if (llt.info() != Eigen::Success) throw RankError("basis Gram matrix is singular");
  const Eigen::MatrixXd d = llt.solve(g01);
  return FunctionalSample{x.basis, x.coef * d.transpose(), x.deriv_order + 1};
}

FunctionalSample derivative(const FunctionalSample& x, int k) {
  FunctionalSample out = x;
  for (int i = 0; i < k; ++i) out = derivative(out);
  return out;
}

Eigen::MatrixXd evaluate(const FunctionalSample& x, std::span<const double> points, int deriv) {
  return x.coef * eval(x.basis, points, deriv).transpose();
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> endpoints(const FunctionalSample& x) {
  static constexpr double kEnds[] = {0.0, 1.0};
  const Eigen::MatrixXd v = evaluate(x, kEnds, 0);
  return {v.col(0), v.col(1)};
}

Eigen::MatrixXd design_inner_products(const FunctionalSample& x, const Basis& coef_basis) {
  return x.coef * gram(x.basis, coef_basis, 0, 0);
}

Eigen::MatrixXd analytic_inner_products(const FunctionalSample& x, const Basis& coef_basis, int deriv) {
  return x.coef * gram(x.basis, coef_basis, deriv, 0);
}

}  // namespace fundrv
