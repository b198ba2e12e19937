#include "fundrv/penreg.hpp"

#include "fundrv/errors.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>

namespace fundrv {

namespace {

// Relative pivot threshold below which the stacked system counts as singular.
constexpr double kRankTolerance = 1e-11;

Eigen::MatrixXd symmetric_root(const Eigen::MatrixXd& p) {
  if (p.size() == 0) return Eigen::MatrixXd(p.rows(), 0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (p + p.transpose()));
  const Eigen::VectorXd& s = es.eigenvalues();
  const double smax = s.cwiseAbs().maxCoeff();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] > 1e-14 * smax) keep.push_back(i);
  }
  Eigen::MatrixXd root(p.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    root.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(keep[c]) * std::sqrt(s[keep[c]]);
  }
  return root;
}

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string impact_name(const PointImpact& im) {
  return "X" + std::string(im.deriv > 0 ? std::to_string(im.deriv) : "") + "(" +
         (im.end == Endpoint::Left ? "0" : "1") + ")";
}

void check_impacts(const Eigen::MatrixXd& cols, const std::vector<PointImpact>& impacts) {
  const Eigen::Index n = cols.rows();
  Eigen::MatrixXd centered = cols.rowwise() - cols.colwise().mean();
  for (Eigen::Index j = 0; j < cols.cols(); ++j) {
    const double scale = std::max(1.0, cols.col(j).cwiseAbs().maxCoeff());
    if (centered.col(j).norm() <= 1e-10 * scale * std::sqrt(static_cast<double>(n))) {
      throw EstimabilityError("impact column " + impact_name(impacts[j]) +
                              " is constant across curves and collinear with the intercept");
    }
  }
  for (Eigen::Index a = 0; a < cols.cols(); ++a) {
    for (Eigen::Index b = a + 1; b < cols.cols(); ++b) {
      const double corr = centered.col(a).dot(centered.col(b)) / (centered.col(a).norm() * centered.col(b).norm());
      if (std::abs(corr) > 1.0 - 1e-10) {
        throw EstimabilityError("impact columns " + impact_name(impacts[a]) + " and " + impact_name(impacts[b]) +
                                " are collinear (e.g. periodic curves); the augmented model is not estimable");
      }
    }
  }
}

struct StackedQr {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
  bool full_rank = false;
};

StackedQr factor(const AugmentedDesign& d, double lambda) {
  const Eigen::Index n = d.n();
  const Eigen::Index p = d.p();
  const Eigen::Index r = lambda > 0.0 ? d.penalty_root.cols() : 0;
  Eigen::MatrixXd m(n + r, p);
  m.topRows(n) = d.Zt;
  if (r > 0) m.bottomRows(r) = std::sqrt(lambda) * d.penalty_root.transpose();
  StackedQr out{Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(m), false};
  out.qr.setThreshold(kRankTolerance);
  out.full_rank = out.qr.rank() == p;
  return out;
}

}  // namespace

AugmentedDesign AugmentedDesign::from_matrices(Eigen::MatrixXd zt, Eigen::MatrixXd pt,
                                               std::vector<ColumnLabel> labels) {
  if (pt.rows() != zt.cols() || pt.cols() != zt.cols()) {
    throw std::invalid_argument("penalty must be p x p with p = design columns");
  }
  if (labels.empty()) {
    labels.resize(static_cast<std::size_t>(zt.cols()));
    for (std::size_t j = 0; j < labels.size(); ++j) {
      labels[j].role = j == 0 ? ColumnRole::Intercept : ColumnRole::Functional;
      labels[j].index = j;
      labels[j].name = "c" + std::to_string(j);
    }
  }
  AugmentedDesign d{std::move(zt), std::move(pt), std::move(labels), {}};
  d.penalty_root = symmetric_root(d.Pt);
  return d;
}

AugmentedDesign assemble(const Eigen::VectorXd& y, const FunctionalSample& x, const DesignSpec& spec) {
  validate(x);
  const Eigen::Index n = x.size();
  if (y.size() != n) throw std::invalid_argument("response length does not match curve count");
  for (std::size_t a = 0; a < spec.impacts.size(); ++a) {
    for (std::size_t b = a + 1; b < spec.impacts.size(); ++b) {
      if (spec.impacts[a] == spec.impacts[b]) throw std::invalid_argument("duplicate point impact in design spec");
    }
  }
  const Eigen::Index q = spec.scalars ? spec.scalars->cols() : 0;
  if (spec.scalars && spec.scalars->rows() != n) throw std::invalid_argument("scalar covariates row count mismatch");
  const auto ni = static_cast<Eigen::Index>(spec.impacts.size());
  const auto k = static_cast<Eigen::Index>(spec.coef_basis.size());
  const Eigen::Index p = 1 + q + ni + k;

  int max_deriv = spec.functional_deriv;
  for (const auto& im : spec.impacts) max_deriv = std::max(max_deriv, im.deriv);
  std::vector<FunctionalSample> derivs{x};
  for (int dd = 1; dd <= max_deriv; ++dd) derivs.push_back(derivative(derivs.back()));

  AugmentedDesign d;
  d.Zt.resize(n, p);
  d.labels.reserve(static_cast<std::size_t>(p));
  d.Zt.col(0).setOnes();
  d.labels.push_back({ColumnRole::Intercept, 0, Endpoint::Left, 0, "intercept"});
  for (Eigen::Index j = 0; j < q; ++j) {
    d.Zt.col(1 + j) = spec.scalars->col(j);
    const auto idx = static_cast<std::size_t>(j);
    std::string name = idx < spec.scalar_names.size() ? spec.scalar_names[idx] : "z" + std::to_string(j);
    d.labels.push_back({ColumnRole::Scalar, 0, Endpoint::Left, idx, std::move(name)});
  }
  Eigen::MatrixXd impact_cols(n, ni);
  for (Eigen::Index j = 0; j < ni; ++j) {
    const PointImpact& im = spec.impacts[static_cast<std::size_t>(j)];
    const auto ends = endpoints(derivs[static_cast<std::size_t>(im.deriv)]);
    impact_cols.col(j) = im.end == Endpoint::Left ? ends.first : ends.second;
    d.labels.push_back({ColumnRole::Impact, im.deriv, im.end, static_cast<std::size_t>(j), impact_name(im)});
  }
  check_impacts(impact_cols, spec.impacts);
  d.Zt.middleCols(1 + q, ni) = impact_cols;
  d.Zt.rightCols(k) = design_inner_products(derivs[static_cast<std::size_t>(spec.functional_deriv)], spec.coef_basis);
  for (Eigen::Index j = 0; j < k; ++j) {
    d.labels.push_back(
        {ColumnRole::Functional, spec.functional_deriv, Endpoint::Left, static_cast<std::size_t>(j),
         "g" + std::to_string(j)});
  }
  d.Pt = Eigen::MatrixXd::Zero(p, p);
  d.Pt.bottomRightCorner(k, k) = penalty_matrix(spec.coef_basis);
  d.penalty_root = symmetric_root(d.Pt);
  return d;
}

PenalizedFit fit(const AugmentedDesign& d, const Eigen::VectorXd& y, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be finite and >= 0");
  if (y.size() != d.n()) throw std::invalid_argument("response length does not match design rows");
  const Eigen::Index n = d.n();
  const Eigen::Index p = d.p();
  StackedQr f = factor(d, lambda);
  if (!f.full_rank) {
    double viable = std::numeric_limits<double>::quiet_NaN();
    for (int e = -11; e <= 2; ++e) {
      const double cand = std::pow(10.0, e);
      if (cand > lambda && factor(d, cand).full_rank) {
        viable = cand;
        break;
      }
    }
    throw SingularSystemError("penalized system is singular at lambda = " + fmt_g(lambda) +
                                  "; smallest viable lambda = " + fmt_g(viable),
                              viable);
  }
  const Eigen::Index rows = f.qr.rows();
  // Thin Q restricted to the data rows: Z P R^{-1} = Q_top.
  Eigen::MatrixXd q_thin = f.qr.householderQ() * Eigen::MatrixXd::Identity(rows, p);
  const Eigen::MatrixXd q_top = q_thin.topRows(n);
  const auto r = f.qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
  Eigen::MatrixXd r_inv = Eigen::MatrixXd::Identity(p, p);
  r.solveInPlace(r_inv);
  const Eigen::MatrixXd perm_rinv = f.qr.colsPermutation() * r_inv;  // P R^{-1}

  PenalizedFit out;
  out.lambda = lambda;
  out.coef_map = perm_rinv * q_top.transpose();
  out.gt = out.coef_map * y;
  out.fitted = q_top * (q_top.transpose() * y);
  out.hat_diag = q_top.rowwise().squaredNorm();
  out.df = out.hat_diag.sum();
  out.rss = (y - out.fitted).squaredNorm();
  const double resid_df = static_cast<double>(n) - out.df;
  out.sigma2_hat = resid_df > 0.0 ? out.rss / resid_df : std::numeric_limits<double>::quiet_NaN();
  out.A_inv = perm_rinv * perm_rinv.transpose();
  out.sandwich = out.coef_map * out.coef_map.transpose();
  return out;
}

std::vector<double> default_lambda_grid() {
  std::vector<double> g;
  for (int e = -11; e <= 2; ++e) g.push_back(std::pow(10.0, e));
  return g;
}

OcvResult ocv(const AugmentedDesign& d, const Eigen::VectorXd& y, std::span<const double> lambda_grid,
              CvCriterion criterion) {
  if (lambda_grid.empty()) throw std::invalid_argument("lambda grid must be nonempty");
  OcvResult out;
  out.scores.reserve(lambda_grid.size());
  const double inf = std::numeric_limits<double>::infinity();
  const auto n = static_cast<double>(d.n());
  for (double lambda : lambda_grid) {
    double score = inf;
    try {
      const PenalizedFit f = fit(d, y, lambda);
      if (criterion == CvCriterion::Generalized) {
        const double denom = n - f.df;
        score = denom > 0.0 ? n * f.rss / (denom * denom) : inf;
      } else if (f.hat_diag.maxCoeff() < 1.0 - 1e-12) {
        score = ((y - f.fitted).array() / (1.0 - f.hat_diag.array())).square().sum();
      }
    } catch (const SingularSystemError&) {
      score = inf;
    }
    out.scores.push_back(score);
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < lambda_grid.size(); ++i) {
    const double si = out.scores[i];
    const double sb = out.scores[best];
    if (si < sb || (si == sb && lambda_grid[i] < lambda_grid[best])) best = i;
  }
  out.lambda_star = lambda_grid[best];
  return out;
}

}  // namespace fundrv
