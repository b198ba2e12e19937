#include "fundrv/dtest.hpp"

#include "fundrv/errors.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fundrv {

namespace {

Eigen::Index impact_count(TestKind kind) {
  switch (kind) {
    case TestKind::ZeroVsFirst: return 2;
    case TestKind::FirstVsZero: return 1;
    case TestKind::ZeroVsSecond: return 4;
  }
  return 0;
}

Eigen::RowVectorXd basis_at(const Basis& b, double t) {
  const double pts[] = {t};
  return eval(b, pts, 0).row(0);
}

// (C g)' (C V C')^{-1} (C g).
double wald(const Eigen::VectorXd& cg, const Eigen::MatrixXd& cvc) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (cvc + cvc.transpose()));
  const Eigen::VectorXd& s = es.eigenvalues();
  if (!(s.maxCoeff() > 0.0) || s.minCoeff() <= 1e-13 * s.maxCoeff()) {
    throw SingularContrastError("C V C' is singular; the contrast is not estimable at this lambda");
  }
  const Eigen::VectorXd u = es.eigenvectors().transpose() * cg;
  return (u.array().square() / s.array()).sum();
}

}  // namespace

std::string to_string(TestKind kind) {
  switch (kind) {
    case TestKind::ZeroVsFirst: return "0v1";
    case TestKind::FirstVsZero: return "1v0";
    case TestKind::ZeroVsSecond: return "0v2";
  }
  return "?";
}

TestKind parse_test_kind(const std::string& s) {
  if (s == "0v1") return TestKind::ZeroVsFirst;
  if (s == "1v0") return TestKind::FirstVsZero;
  if (s == "0v2") return TestKind::ZeroVsSecond;
  throw std::invalid_argument("unknown test kind '" + s + "' (expected 0v1, 1v0 or 0v2)");
}

std::string to_string(Decision d) {
  switch (d) {
    case Decision::KeepNull: return "KeepNull";
    case Decision::SwitchToAlternative: return "SwitchToAlternative";
    case Decision::NeitherAdequate: return "NeitherAdequate";
  }
  return "?";
}

Decision decide(double p_stage1, double p_stage2, double level) {
  if (!(p_stage1 < level)) return Decision::KeepNull;
  return p_stage2 < level ? Decision::NeitherAdequate : Decision::SwitchToAlternative;
}

DesignSpec design_spec(TestKind kind, const Basis& coef_basis, std::optional<Eigen::MatrixXd> scalars,
                       std::vector<std::string> scalar_names) {
  DesignSpec s{coef_basis, 0, {}, std::move(scalars), std::move(scalar_names)};
  switch (kind) {
    case TestKind::ZeroVsFirst:
      s.impacts = {{0, Endpoint::Left}, {0, Endpoint::Right}};
      break;
    case TestKind::FirstVsZero:
      s.functional_deriv = 1;
      s.impacts = {{0, Endpoint::Right}};
      break;
    case TestKind::ZeroVsSecond:
      s.impacts = {{1, Endpoint::Left}, {1, Endpoint::Right}, {0, Endpoint::Left}, {0, Endpoint::Right}};
      break;
  }
  return s;
}

std::pair<ContrastMatrix, ContrastMatrix> contrasts(TestKind kind, const Basis& coef_basis, Eigen::Index p) {
  const auto k = static_cast<Eigen::Index>(coef_basis.size());
  const Eigen::Index ni = impact_count(kind);
  const Eigen::Index q = p - 1 - ni - k;
  if (q < 0) {
    throw std::invalid_argument("design has " + std::to_string(p) + " columns; test " + to_string(kind) +
                                " with a " + std::to_string(k) + "-function basis needs at least " +
                                std::to_string(1 + ni + k));
  }
  const Eigen::Index off = 1 + q;  // first impact column
  const Eigen::Index fun = off + ni;

  ContrastMatrix c1{Eigen::MatrixXd::Zero(ni, p), "point impacts vanish"};
  for (Eigen::Index j = 0; j < ni; ++j) c1.C(j, off + j) = 1.0;

  ContrastMatrix c2;
  switch (kind) {
    case TestKind::ZeroVsFirst: {
      c2.C = Eigen::MatrixXd::Zero(1, p);
      c2.C(0, off) = c2.C(0, off + 1) = 1.0;
      c2.C.block(0, fun, 1, k) = integral_vector(coef_basis).transpose();
      c2.description = "impacts plus integral of the coefficient function vanish";
      break;
    }
    case TestKind::FirstVsZero: {
      c2.C = Eigen::MatrixXd::Zero(2, p);
      c2.C(0, off) = 1.0;
      c2.C.block(0, fun, 1, k) = basis_at(coef_basis, 1.0);
      c2.C.block(1, fun, 1, k) = basis_at(coef_basis, 0.0);
      c2.description = "impact equals minus the coefficient function at 1, which vanishes at 0";
      break;
    }
    case TestKind::ZeroVsSecond: {
      c2.C = Eigen::MatrixXd::Zero(2, p);
      c2.C(0, off + 2) = c2.C(0, off + 3) = 1.0;
      c2.C.block(0, fun, 1, k) = integral_vector(coef_basis).transpose();
      c2.C(1, off) = c2.C(1, off + 1) = 1.0;
      c2.C(1, off + 2) = -1.0;
      c2.C.block(1, fun, 1, k) = -double_integral_vector(coef_basis).transpose();
      c2.description = "both integration-by-parts constraints hold";
      break;
    }
  }
  return {c1, c2};
}

double f_statistic(const PenalizedFit& fit, const ContrastMatrix& c) {
  if (c.C.cols() != fit.gt.size()) throw std::invalid_argument("contrast is not conformable with the fit");
  const Eigen::VectorXd cg = c.C * fit.gt;
  if (cg.isZero(0.0)) return 0.0;
  const double w = wald(cg, c.C * fit.sandwich * c.C.transpose());
  const double denom = static_cast<double>(c.p_C()) * fit.sigma2_hat;
  if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
  return w / denom;
}

Noncentrality noncentrality(const AugmentedDesign& d, const Eigen::VectorXd& y, const ContrastMatrix& c,
                            double lambda) {
  Noncentrality out;
  const PenalizedFit alt = fit(d, y, kLambdaFloor);

  Eigen::MatrixXd ls_map;
  try {
    ls_map = fit(d, alt.fitted, 0.0).coef_map;
  } catch (const SingularSystemError&) {
    ls_map = alt.coef_map;
    out.ridge_floor_used = true;
  }
  const Eigen::VectorXd g_a = ls_map * alt.fitted;
  const Eigen::MatrixXd cct = c.C * c.C.transpose();
  const Eigen::VectorXd g_null = g_a - c.C.transpose() * cct.ldlt().solve(c.C * g_a);
  const Eigen::VectorXd y_null = d.Zt * g_null;

  const PenalizedFit at = lambda == kLambdaFloor ? alt : fit(d, y, lambda);
  const Eigen::VectorXd cg0 = c.C * (at.coef_map * y_null);
  if (cg0.isZero(0.0)) return out;
  const double w = wald(cg0, c.C * at.sandwich * c.C.transpose());
  out.eta = alt.sigma2_hat > 0.0 ? w / alt.sigma2_hat : std::numeric_limits<double>::infinity();
  return out;
}

double noncentral_f_pvalue(double f, double df1, double df2, double eta) {
  if (!std::isfinite(df1) || !std::isfinite(df2) || !std::isfinite(eta) || std::isnan(f)) {
    throw std::invalid_argument("noncentral F p-value needs finite arguments");
  }
  if (!(df1 > 0.0) || !(df2 > 0.0) || f < 0.0 || eta < 0.0) {
    throw std::invalid_argument("noncentral F p-value needs df1, df2 > 0 and f, eta >= 0");
  }
  if (f == 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  const double x = df1 * f / (df1 * f + df2);
  const double b = df2 / 2.0;
  if (eta == 0.0) return boost::math::ibetac(df1 / 2.0, b, x);

  const double mu = eta / 2.0;
  const auto mode = static_cast<long>(std::floor(mu));
  double sum = 0.0;
  for (long j = 0;; ++j) {
    const double jd = static_cast<double>(j);
    const double log_w = -mu + jd * std::log(mu) - std::lgamma(jd + 1.0);
    sum += std::exp(log_w) * boost::math::ibetac(df1 / 2.0 + jd, b, x);
    // P(N > j) for N ~ Poisson(mu).
    if (j >= mode && boost::math::gamma_p(jd + 1.0, mu) < 1e-12) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

ContrastResult evaluate_contrast(const AugmentedDesign& d, const Eigen::VectorXd& y, const PenalizedFit& fit,
                                 const ContrastMatrix& c) {
  ContrastResult r;
  r.p_C = c.p_C();
  r.lambda_used = fit.lambda;
  r.df2 = static_cast<double>(d.n()) - fit.df;
  r.F = f_statistic(fit, c);
  r.eta = noncentrality(d, y, c, fit.lambda).eta;
  const auto df1 = static_cast<double>(r.p_C);
  if (!(r.df2 > 0.0)) throw std::invalid_argument("no residual degrees of freedom left (n <= df)");
  r.p_value_central = noncentral_f_pvalue(r.F, df1, r.df2, 0.0);
  r.p_value = std::isfinite(r.eta) ? noncentral_f_pvalue(r.F, df1, r.df2, r.eta) : 1.0;
  return r;
}

DerivativeTestReport run_test(const AugmentedDesign& d, const Eigen::VectorXd& y, TestKind kind,
                              const Basis& coef_basis, const LambdaPolicy& policy, double level) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("level must lie in (0, 1)");
  DerivativeTestReport rep;
  rep.test_kind = kind;
  rep.level = level;
  if (policy.kind == LambdaPolicy::Kind::OCV) {
    rep.ocv = ocv(d, y, policy.grid);
    rep.lambda = rep.ocv->lambda_star;
  } else {
    rep.lambda = policy.lambda;
  }
  const PenalizedFit f = fit(d, y, rep.lambda);
  rep.df = f.df;
  const auto [c1, c2] = contrasts(kind, coef_basis, d.p());
  rep.stage1 = evaluate_contrast(d, y, f, c1);
  rep.stage2 = evaluate_contrast(d, y, f, c2);
  rep.decision = decide(rep.stage1.p_value, rep.stage2.p_value, level);
  return rep;
}

DerivativeTestReport run_test(const Eigen::VectorXd& y, const FunctionalSample& x, TestKind kind,
                              const std::optional<Eigen::MatrixXd>& scalars, const Basis& coef_basis,
                              const LambdaPolicy& policy, double level) {
  const AugmentedDesign d = assemble(y, x, design_spec(kind, coef_basis, scalars));
  return run_test(d, y, kind, coef_basis, policy, level);
}

}  // namespace fundrv
