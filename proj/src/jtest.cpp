#include "fundrv/jtest.hpp"

#include "fundrv/errors.hpp"
#include "fundrv/kernels.hpp"
#include "fundrv/rng.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace fundrv {

namespace {

constexpr std::uint32_t kSplitStream = 3;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::size_t> default_k_grid(std::size_t n) {
  std::vector<std::size_t> g;
  for (std::size_t k = 2; k <= std::min<std::size_t>(n - 2, 30); ++k) g.push_back(k);
  return g;
}

// Window halfway between the k-th and (k+1)-th smallest squared distances.
double knn_bandwidth(std::vector<double>& scratch, std::size_t k) {
  std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k), scratch.end());
  const double above = scratch[k];
  const double below = *std::max_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k));
  return 0.5 * (std::sqrt(below) + std::sqrt(above));
}

std::size_t nearest(const std::vector<double>& d2) {
  return static_cast<std::size_t>(std::min_element(d2.begin(), d2.end()) - d2.begin());
}

Eigen::MatrixXd linear_columns(const FunctionalSample& x, const Eigen::MatrixXd* scalars, int deriv, const Basis& b) {
  const Eigen::Index n = x.size();
  const Eigen::Index q = scalars ? scalars->cols() : 0;
  const auto k = static_cast<Eigen::Index>(b.size());
  Eigen::MatrixXd z(n, 1 + q + k);
  z.col(0).setOnes();
  if (q > 0) {
    if (scalars->rows() != n) throw std::invalid_argument("scalar covariates row count mismatch");
    z.middleCols(1, q) = *scalars;
  }
  z.rightCols(k) = design_inner_products(derivative(x, deriv), b);
  return z;
}

class LinearModel final : public FittedModel {
 public:
  LinearModel(const FunctionalSample& x, const Eigen::VectorXd& y, const Eigen::MatrixXd* scalars, int deriv,
              const JTestOptions& opts)
      : basis_(opts.coef_basis), deriv_(deriv), use_scalars_(scalars != nullptr) {
    const Eigen::MatrixXd z = linear_columns(x, scalars, deriv, basis_);
    const auto k = static_cast<Eigen::Index>(basis_.size());
    Eigen::MatrixXd pen = Eigen::MatrixXd::Zero(z.cols(), z.cols());
    pen.bottomRightCorner(k, k) = penalty_matrix(basis_);
    const AugmentedDesign d = AugmentedDesign::from_matrices(z, pen);
    const double lambda = ocv(d, y, opts.lambda_grid).lambda_star;
    const PenalizedFit f = fit(d, y, lambda);
    g_ = f.gt;
    fitted_ = f.fitted;
  }

  Eigen::VectorXd predict(const FunctionalSample& x, const Eigen::MatrixXd* scalars) const override {
    return linear_columns(x, use_scalars_ ? scalars : nullptr, deriv_, basis_) * g_;
  }

  const Eigen::VectorXd& fitted() const noexcept { return fitted_; }

 private:
  Basis basis_;
  int deriv_;
  bool use_scalars_;
  Eigen::VectorXd g_;
  Eigen::VectorXd fitted_;
};

class KernelModel final : public FittedModel {
 public:
  explicit KernelModel(NWModel m) : m_(std::move(m)) {}
  Eigen::VectorXd predict(const FunctionalSample& x, const Eigen::MatrixXd*) const override {
    return m_.predict(x).values;
  }

 private:
  NWModel m_;
};

class SemiModel final : public FittedModel {
 public:
  SemiModel(const FunctionalSample& x, const Eigen::VectorXd& y, const Eigen::MatrixXd* scalars, int deriv,
            const JTestOptions& opts)
      : lin_(x, y, scalars, deriv, opts), nw_(x, y - lin_.fitted(), deriv, opts.bandwidth) {}

  Eigen::VectorXd predict(const FunctionalSample& x, const Eigen::MatrixXd* scalars) const override {
    return lin_.predict(x, scalars) + nw_.predict(x).values;
  }

 private:
  LinearModel lin_;
  NWModel nw_;
};

}  // namespace

Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> semimetric_coords(const FunctionalSample& x,
                                                                                          int deriv) {
  if (deriv < 0) throw std::invalid_argument("semi-metric derivative order must be nonnegative");
  const FunctionalSample xd = derivative(x, deriv);
  Eigen::LLT<Eigen::MatrixXd> llt(gram(x.basis, x.basis));
  if (llt.info() != Eigen::Success) throw RankError("basis Gram matrix is singular");
  return xd.coef * Eigen::MatrixXd(llt.matrixL());
}

NWModel::NWModel(const FunctionalSample& x, const Eigen::VectorXd& y, int semimetric_deriv,
                 const BandwidthPolicy& policy)
    : coords_(semimetric_coords(x, semimetric_deriv)),
      y_(y),
      basis_(x.basis),
      deriv_(semimetric_deriv),
      knn_(policy.kind == BandwidthPolicy::Kind::KnnCV) {
  const auto n = static_cast<std::size_t>(x.size());
  if (n < 5) throw std::invalid_argument("Nadaraya-Watson needs at least 5 training curves");
  if (y.size() != x.size()) throw std::invalid_argument("response length does not match curve count");
  if (!knn_) {
    if (!(policy.h > 0.0) || !std::isfinite(policy.h)) throw std::invalid_argument("bandwidth must be positive");
    h_ = policy.h;
    return;
  }
  std::vector<std::size_t> grid = policy.k_grid.empty() ? default_k_grid(n) : policy.k_grid;
  for (std::size_t k : grid) {
    if (k < 1 || k > n - 2) throw std::invalid_argument("k-NN grid values must lie in [1, n - 2]");
  }
  // All leave-one-out squared distances, self excluded.
  const std::size_t dim = static_cast<std::size_t>(coords_.cols());
  std::vector<std::vector<double>> d2(n, std::vector<double>(n));
  std::vector<std::vector<double>> sorted(n);
  for (std::size_t i = 0; i < n; ++i) {
    kernels::sq_distances(coords_.data(), n, dim, dim, coords_.row(static_cast<Eigen::Index>(i)).data(),
                          d2[i].data());
    d2[i][i] = kInf;
    sorted[i] = d2[i];
    std::sort(sorted[i].begin(), sorted[i].end());
  }
  double best = kInf;
  for (std::size_t k : grid) {
    double score = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double h = 0.5 * (std::sqrt(sorted[i][k - 1]) + std::sqrt(sorted[i][k]));
      double pred;
      const kernels::KernelSums s =
          h > 0.0 ? kernels::quad_kernel_sums(d2[i].data(), y_.data(), n, 1.0 / (h * h)) : kernels::KernelSums{};
      pred = s.den > 0.0 ? s.num / s.den : y_[static_cast<Eigen::Index>(nearest(d2[i]))];
      const double e = y_[static_cast<Eigen::Index>(i)] - pred;
      score += e * e;
    }
    cv_.emplace_back(k, score);
    if (score < best) {
      best = score;
      k_ = k;
    }
  }
}

double NWModel::predict_one(const double* q, std::vector<double>& d2, std::ptrdiff_t self, std::size_t k,
                            bool& fallback) const {
  const auto n = static_cast<std::size_t>(coords_.rows());
  const auto dim = static_cast<std::size_t>(coords_.cols());
  kernels::sq_distances(coords_.data(), n, dim, dim, q, d2.data());
  if (self >= 0) d2[static_cast<std::size_t>(self)] = kInf;
  double h = h_;
  if (knn_) {
    std::vector<double> scratch = d2;
    h = knn_bandwidth(scratch, k);
  }
  kernels::KernelSums s;
  if (h > 0.0) s = kernels::quad_kernel_sums(d2.data(), y_.data(), n, 1.0 / (h * h));
  fallback = !(s.den > 0.0);
  return fallback ? y_[static_cast<Eigen::Index>(nearest(d2))] : s.num / s.den;
}

NWPrediction NWModel::predict(const FunctionalSample& x) const {
  if (!(x.basis == basis_)) throw std::invalid_argument("query curves use a different basis than the training curves");
  const auto q = semimetric_coords(x, deriv_);
  const std::size_t k = std::min<std::size_t>(k_, static_cast<std::size_t>(coords_.rows()) - 1);
  NWPrediction out{Eigen::VectorXd(q.rows()), 0};
  std::vector<double> d2(static_cast<std::size_t>(coords_.rows()));
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    bool fb = false;
    out.values[i] = predict_one(q.row(i).data(), d2, -1, k, fb);
    out.nearest_fallbacks += fb;
  }
  return out;
}

NWPrediction NWModel::loo_fitted() const {
  NWPrediction out{Eigen::VectorXd(coords_.rows()), 0};
  std::vector<double> d2(static_cast<std::size_t>(coords_.rows()));
  for (Eigen::Index i = 0; i < coords_.rows(); ++i) {
    bool fb = false;
    out.values[i] = predict_one(coords_.row(i).data(), d2, i, k_, fb);
    out.nearest_fallbacks += fb;
  }
  return out;
}

NWModel nw_fit(const FunctionalSample& x, const Eigen::VectorXd& y, int semimetric_deriv,
               const BandwidthPolicy& policy) {
  return NWModel(x, y, semimetric_deriv, policy);
}

Split split(std::size_t n, double frac, std::uint64_t seed) {
  if (!(frac > 0.0 && frac < 1.0)) throw std::invalid_argument("split fraction must lie in (0, 1)");
  const auto n1 = static_cast<std::size_t>(std::llround(frac * static_cast<double>(n)));
  if (n1 < 5 || n - n1 < 5) {
    throw std::invalid_argument("split of " + std::to_string(n) + " curves leaves fewer than 5 on one side");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  RandomStream rs(seed, kSplitStream, 0);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(perm[i], perm[rs.below(static_cast<std::uint32_t>(i + 1))]);
  }
  Split s{{perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n1)},
          {perm.begin() + static_cast<std::ptrdiff_t>(n1), perm.end()}};
  std::sort(s.s1.begin(), s.s1.end());
  std::sort(s.s2.begin(), s.s2.end());
  return s;
}

ModelSpec ModelSpec::parse(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("model spec '" + s + "' must look like kind:deriv");
  const std::string kind = s.substr(0, colon);
  const std::string rest = s.substr(colon + 1);
  ModelSpec m;
  if (kind == "nw") {
    m.kind = Kind::NW;
  } else if (kind == "flm") {
    m.kind = Kind::FLM;
  } else if (kind == "fplm") {
    m.kind = Kind::FPLM;
  } else if (kind == "semi") {
    m.kind = Kind::Semi;
  } else {
    throw std::invalid_argument("unknown model kind '" + kind + "' (expected nw, flm, fplm or semi)");
  }
  if (rest.empty() || rest.size() > 2 || !std::all_of(rest.begin(), rest.end(), ::isdigit)) {
    throw std::invalid_argument("model spec '" + s + "' needs a derivative order");
  }
  m.deriv = std::stoi(rest);
  return m;
}

std::string ModelSpec::describe() const {
  static const char* names[] = {"nw", "flm", "fplm", "semi"};
  return std::string(names[static_cast<int>(kind)]) + ":" + std::to_string(deriv);
}

std::unique_ptr<FittedModel> fit_model(const ModelSpec& spec, const FunctionalSample& x, const Eigen::VectorXd& y,
                                       const Eigen::MatrixXd* scalars, const JTestOptions& opts) {
  const bool needs_scalars = spec.kind == ModelSpec::Kind::FPLM || spec.kind == ModelSpec::Kind::Semi;
  if (needs_scalars && scalars == nullptr) {
    throw std::invalid_argument("model " + spec.describe() + " needs scalar covariates");
  }
  switch (spec.kind) {
    case ModelSpec::Kind::NW: return std::make_unique<KernelModel>(NWModel(x, y, spec.deriv, opts.bandwidth));
    case ModelSpec::Kind::FLM: return std::make_unique<LinearModel>(x, y, nullptr, spec.deriv, opts);
    case ModelSpec::Kind::FPLM: return std::make_unique<LinearModel>(x, y, scalars, spec.deriv, opts);
    case ModelSpec::Kind::Semi: return std::make_unique<SemiModel>(x, y, scalars, spec.deriv, opts);
  }
  throw std::invalid_argument("unknown model kind");
}

JTestResult theta_test(const Eigen::VectorXd& y, const Eigen::VectorXd& m, const Eigen::VectorXd& s,
                       bool free_null_coefficient) {
  const Eigen::Index n = y.size();
  if (m.size() != n || s.size() != n) throw std::invalid_argument("theta test inputs differ in length");
  const double s_scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  if ((s.array() - s.mean()).matrix().norm() <= 1e-12 * s_scale * std::sqrt(static_cast<double>(n))) {
    throw DegenerateRegressorError("alternative fitted values are constant on the test subsample");
  }
  const Eigen::Index p = free_null_coefficient ? 3 : 2;
  if (n <= p) throw std::invalid_argument("theta test needs more observations than coefficients");
  Eigen::MatrixXd design(n, p);
  design.col(0).setOnes();
  if (free_null_coefficient) design.col(1) = m;
  design.col(p - 1) = s;
  const Eigen::VectorXd r = free_null_coefficient ? y : Eigen::VectorXd(y - m);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-12);
  if (qr.rank() < p) throw DegenerateRegressorError("alternative fitted values are collinear with the null fit");
  const Eigen::VectorXd coef = qr.solve(r);
  JTestResult out;
  out.df = static_cast<double>(n - p);
  out.theta_hat = coef[p - 1];
  const double sigma2 = (r - design * coef).squaredNorm() / out.df;
  const Eigen::MatrixXd xtx_inv = (design.transpose() * design).inverse();
  const double se = std::sqrt(sigma2 * xtx_inv(p - 1, p - 1));
  if (se > 0.0) {
    out.t_stat = out.theta_hat / se;
  } else {
    out.t_stat = out.theta_hat == 0.0 ? 0.0 : std::copysign(kInf, out.theta_hat);
  }
  if (std::isinf(out.t_stat)) {
    out.p_value = 0.0;
  } else {
    boost::math::students_t dist(out.df);
    out.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(out.t_stat))));
  }
  return out;
}

JTestResult j_test(const Eigen::VectorXd& y, const FunctionalSample& x, const std::optional<Eigen::MatrixXd>& scalars,
                   const ModelSpec& null_spec, const ModelSpec& alt_spec, double frac, std::uint64_t seed,
                   const JTestOptions& opts) {
  validate(x);
  if (y.size() != x.size()) throw std::invalid_argument("response length does not match curve count");
  const Split sp = split(static_cast<std::size_t>(x.size()), frac, seed);
  auto pick = [](const Eigen::VectorXd& v, const std::vector<std::size_t>& idx) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[static_cast<Eigen::Index>(idx[i])];
    return out;
  };
  auto pick_rows = [](const Eigen::MatrixXd& v, const std::vector<std::size_t>& idx) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), v.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = v.row(static_cast<Eigen::Index>(idx[i]));
    return out;
  };
  const FunctionalSample x1 = x.rows(sp.s1), x2 = x.rows(sp.s2);
  const Eigen::VectorXd y1 = pick(y, sp.s1), y2 = pick(y, sp.s2);
  std::optional<Eigen::MatrixXd> z1, z2;
  if (scalars) {
    z1 = pick_rows(*scalars, sp.s1);
    z2 = pick_rows(*scalars, sp.s2);
  }
  const Eigen::MatrixXd* p1 = z1 ? &*z1 : nullptr;
  const Eigen::MatrixXd* p2 = z2 ? &*z2 : nullptr;
  const auto null_model = fit_model(null_spec, x1, y1, p1, opts);
  const auto alt_model = fit_model(alt_spec, x1, y1, p1, opts);
  JTestResult out = theta_test(y2, null_model->predict(x2, p2), alt_model->predict(x2, p2), opts.free_null_coefficient);
  out.split_seed = seed;
  out.n1 = sp.s1.size();
  out.n2 = sp.s2.size();
  return out;
}

}  // namespace fundrv
