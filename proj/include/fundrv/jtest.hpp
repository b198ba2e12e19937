#pragma once

#include "fundrv/basis.hpp"
#include "fundrv/fdata.hpp"
#include "fundrv/penreg.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fundrv {

/// Coordinates whose Euclidean distances equal L2 distances between the
/// deriv-th projected derivatives of the curves.
Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> semimetric_coords(const FunctionalSample& x,
                                                                                          int deriv);

struct BandwidthPolicy {
  enum class Kind { Fixed, KnnCV };
  Kind kind = Kind::KnnCV;
  double h = 0.0;
  // Empty: 2, ..., min(n - 2, 30).
  std::vector<std::size_t> k_grid;

  static BandwidthPolicy fixed(double h) { return {Kind::Fixed, h, {}}; }
  static BandwidthPolicy knn_cv(std::vector<std::size_t> grid = {}) { return {Kind::KnnCV, 0.0, std::move(grid)}; }
};

struct NWPrediction {
  Eigen::VectorXd values;
  // Queries where every kernel weight was zero; the nearest curve's response is used.
  std::size_t nearest_fallbacks = 0;
};

/// Nadaraya-Watson regression with kernel 1.5 (1 - u^2) on [0, 1]. With a
/// k-nearest-neighbour bandwidth the window at each query sits halfway
/// between the k-th and (k+1)-th nearest training curves.
class NWModel {
 public:
  NWModel(const FunctionalSample& x, const Eigen::VectorXd& y, int semimetric_deriv, const BandwidthPolicy& policy);

  int semimetric_deriv() const noexcept { return deriv_; }
  bool uses_knn() const noexcept { return knn_; }
  // Fixed bandwidth, or 0 with k-NN windows.
  double bandwidth() const noexcept { return h_; }
  std::size_t neighbours() const noexcept { return k_; }
  const Eigen::VectorXd& train_y() const noexcept { return y_; }
  // Leave-one-out score of each k in the grid (k-NN policy only).
  const std::vector<std::pair<std::size_t, double>>& cv_scores() const noexcept { return cv_; }

  NWPrediction predict(const FunctionalSample& x) const;
  // Fitted values at the training curves, each excluding itself.
  NWPrediction loo_fitted() const;

 private:
  double predict_one(const double* q, std::vector<double>& d2, std::ptrdiff_t self, std::size_t k, bool& fallback) const;

  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> coords_;
  Eigen::VectorXd y_;
  Basis basis_;
  int deriv_;
  bool knn_;
  double h_ = 0.0;
  std::size_t k_ = 0;
  std::vector<std::pair<std::size_t, double>> cv_;
};

NWModel nw_fit(const FunctionalSample& x, const Eigen::VectorXd& y, int semimetric_deriv,
               const BandwidthPolicy& policy = BandwidthPolicy::knn_cv());

struct Split {
  std::vector<std::size_t> s1;
  std::vector<std::size_t> s2;
};

/// Random partition with round(frac * n) training indices, both halves
/// sorted. Throws invalid_argument unless both halves have at least 5.
Split split(std::size_t n, double frac, std::uint64_t seed);

inline constexpr double kDefaultSplitFraction = 160.0 / 215.0;

/// "nw:k" Nadaraya-Watson on X^(k); "flm:k" penalized functional linear
/// model on X^(k); "fplm:k" the same plus scalar covariates; "semi:k" fplm:k
/// plus Nadaraya-Watson on X^(k) fitted to its residuals.
struct ModelSpec {
  enum class Kind { NW, FLM, FPLM, Semi };
  Kind kind = Kind::NW;
  int deriv = 0;

  static ModelSpec parse(const std::string& s);
  std::string describe() const;
};

struct JTestOptions {
  Basis coef_basis = make_fourier_plus_linear(12);
  std::vector<double> lambda_grid = default_lambda_grid();
  BandwidthPolicy bandwidth = BandwidthPolicy::knn_cv();
  // Regress y on [1, m, s] instead of y - m on [1, s].
  bool free_null_coefficient = false;
};

class FittedModel {
 public:
  virtual ~FittedModel() = default;
  virtual Eigen::VectorXd predict(const FunctionalSample& x, const Eigen::MatrixXd* scalars) const = 0;
};

std::unique_ptr<FittedModel> fit_model(const ModelSpec& spec, const FunctionalSample& x, const Eigen::VectorXd& y,
                                       const Eigen::MatrixXd* scalars, const JTestOptions& opts);

struct JTestResult {
  double theta_hat = 0.0;
  double t_stat = 0.0;
  double p_value = 1.0;
  double df = 0.0;
  std::uint64_t split_seed = 0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
};

/// Fits both models on S1, then on S2 regresses y - m on [1, s] and tests
/// the coefficient of s with a two-sided t test on n2 - 2 degrees of freedom.
/// Throws DegenerateRegressorError when s is constant on S2.
JTestResult j_test(const Eigen::VectorXd& y, const FunctionalSample& x, const std::optional<Eigen::MatrixXd>& scalars,
                   const ModelSpec& null_spec, const ModelSpec& alt_spec, double frac, std::uint64_t seed,
                   const JTestOptions& opts = {});

/// Step 3 alone: t test of theta in y - m = a + theta s (or y = a + b m + theta s).
JTestResult theta_test(const Eigen::VectorXd& y, const Eigen::VectorXd& m, const Eigen::VectorXd& s,
                       bool free_null_coefficient = false);

}  // namespace fundrv
