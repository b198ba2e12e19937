#include <doctest.h>

#include "fundrv/errors.hpp"
#include "fundrv/fdata.hpp"
#include "oracles.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace fundrv;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> uniform_grid(std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = static_cast<double>(i) / static_cast<double>(n - 1);
  return g;
}

FunctionalSample random_sample(const Basis& b, Eigen::Index n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Eigen::MatrixXd c(n, static_cast<Eigen::Index>(b.size()));
  for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = z(rng);
  return {b, c, 0};
}

// Fine-grid L2 norm of each row of a matrix of curve values.
Eigen::VectorXd grid_l2(const Eigen::MatrixXd& values) {
  const Eigen::Index m = values.cols();
  const double h = 1.0 / static_cast<double>(m - 1);
  Eigen::VectorXd out(values.rows());
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index p = 0; p < m; ++p) {
      const double w = (p == 0 || p == m - 1) ? 0.5 : 1.0;
      s += w * values(i, p) * values(i, p);
    }
    out[i] = std::sqrt(s * h);
  }
  return out;
}

}  // namespace

TEST_CASE("projection recovers curves in the span") {
  const Basis b = make_bspline(6, 21);
  const FunctionalSample x = random_sample(b, 5, 1);
  const auto g = uniform_grid(101);
  const FunctionalSample back = project(g, evaluate(x, g), b);
  CHECK((back.coef - x.coef).cwiseAbs().maxCoeff() < 1e-10);

  const Basis f = make_fourier_plus_linear(4);
  Eigen::MatrixXd three = Eigen::MatrixXd::Constant(2, 60, 3.0);
  const FunctionalSample c = project(uniform_grid(60), three, f);
  const auto check_pts = uniform_grid(37);
  CHECK((evaluate(c, check_pts).array() - 3.0).abs().maxCoeff() < 1e-10);
}

TEST_CASE("projection errors") {
  const Basis b = make_bspline(6, 21);
  const auto g = uniform_grid(20);
  CHECK_THROWS_AS(project(g, Eigen::MatrixXd::Zero(1, 20), b), RankError);
  // Enough points, but all clustered in one knot interval.
  std::vector<double> clustered;
  for (int i = 0; i < 40; ++i) clustered.push_back(0.001 * i);
  CHECK_THROWS_AS(project(clustered, Eigen::MatrixXd::Zero(1, 40), b), RankError);
}

TEST_CASE("projection residual matches a dense normal-equations oracle") {
  const Basis b = make_bspline(6, 21);
  const auto g = uniform_grid(100);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> z(0.0, 0.05);
  Eigen::MatrixXd v(1, 100);
  for (int p = 0; p < 100; ++p) v(0, p) = std::sin(2 * kPi * 3 * g[p]) + z(rng);
  const FunctionalSample x = project(g, v, b);
  const Eigen::MatrixXd e = eval(b, g, 0);
  const double rss = (v - x.coef * e.transpose()).squaredNorm();
  const Eigen::VectorXd c_ne = (e.transpose() * e).inverse() * e.transpose() * v.row(0).transpose();
  const double rss_ne = (v.row(0).transpose() - e * c_ne).squaredNorm();
  CHECK(std::abs(rss - rss_ne) < 1e-8 * rss_ne);
}

TEST_CASE("projection with optional roughness penalty") {
  const Basis b = make_bspline(6, 21);
  const auto g = uniform_grid(100);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> z(0.0, 0.2);
  Eigen::MatrixXd v(1, 100);
  for (int p = 0; p < 100; ++p) v(0, p) = g[p] + z(rng);
  const FunctionalSample rough = project(g, v, b);
  const FunctionalSample smooth = project(g, v, b, 1e-2);
  const Eigen::MatrixXd pen = penalty_matrix(b);
  CHECK(smooth.coef.row(0).dot(pen * smooth.coef.row(0).transpose()) <
        rough.coef.row(0).dot(pen * rough.coef.row(0).transpose()));
}

TEST_CASE("projected derivative is exact for functions whose derivative stays in the span") {
  const Basis f = make_fourier_plus_linear(3);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(2, 8);
  c(0, 1) = 1.0;  // X(t) = t
  c(1, 2) = 1.0;  // X(t) = sin(2 pi t)
  const FunctionalSample d = derivative(FunctionalSample{f, c, 0});
  CHECK(d.deriv_order == 1);
  Eigen::RowVectorXd one = Eigen::RowVectorXd::Zero(8);
  one[0] = 1.0;
  CHECK((d.coef.row(0) - one).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::RowVectorXd cosine = Eigen::RowVectorXd::Zero(8);
  cosine[3] = 2 * kPi;
  CHECK((d.coef.row(1) - cosine).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("projected spline derivative is the L2-best approximation of the analytic derivative") {
  const Basis b = make_bspline(6, 21);
  const FunctionalSample x = random_sample(b, 6, 3);
  const FunctionalSample d = derivative(x);
  const auto fine = uniform_grid(1001);
  const Eigen::MatrixXd analytic = evaluate(x, fine, 1);
  const Eigen::VectorXd err_proj = grid_l2(evaluate(d, fine) - analytic);
  // Best approximation of the analytic derivative by fine-grid least squares.
  const Eigen::MatrixXd e = eval(b, fine, 0);
  const Eigen::MatrixXd ls = e.colPivHouseholderQr().solve(analytic.transpose()).transpose();
  const Eigen::VectorXd err_ls = grid_l2(ls * e.transpose() - analytic);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    CHECK(err_proj[i] > 0.0);
    CHECK(err_proj[i] <= err_ls[i] * 1.001);
  }
}

TEST_CASE("endpoints") {
  const Basis f = make_fourier_plus_linear(2);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(2, 6);
  c(0, 0) = 4.0;
  c(1, 1) = 1.0;
  const auto [x0, x1] = endpoints(FunctionalSample{f, c, 0});
  CHECK(x0[0] == doctest::Approx(4.0));
  CHECK(x1[0] == doctest::Approx(4.0));
  CHECK(std::abs(x0[1]) < 1e-15);
  CHECK(x1[1] == doctest::Approx(1.0));

  const FunctionalSample r = random_sample(make_bspline(6, 21), 10, 5);
  const auto [r0, r1] = endpoints(r);
  const std::vector<double> ends{0.0, 1.0};
  const Eigen::MatrixXd direct = r.coef * eval(r.basis, ends, 0).transpose();
  CHECK((r0 - direct.col(0)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((r1 - direct.col(1)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("design inner products") {
  const Basis f = make_fourier_plus_linear(3);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(2, 8);
  c(0, 0) = 1.0;
  c(1, 2) = 1.0;
  const Eigen::MatrixXd z = design_inner_products(FunctionalSample{f, c, 0}, f);
  CHECK((z.row(0).transpose() - integral_vector(f)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(z(1, 2) == doctest::Approx(0.5));

  const Basis s = make_bspline(6, 21);
  const FunctionalSample x = random_sample(s, 4, 11);
  const Eigen::MatrixXd zs = design_inner_products(x, f);
  const Eigen::MatrixXd ref = oracle::simpson_outer(
      [&](const std::vector<double>& t) { return Eigen::MatrixXd(evaluate(x, t).transpose()); },
      [&](const std::vector<double>& t) { return eval(f, t, 0); }, 100000);
  CHECK((zs - ref).cwiseAbs().maxCoeff() < 1e-8);

  // Linear in the coefficients.
  const FunctionalSample y = random_sample(s, 4, 12);
  const FunctionalSample sum{s, 2.0 * x.coef - y.coef, 0};
  CHECK((design_inner_products(sum, f) - (2.0 * zs - design_inner_products(y, f))).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("integration by parts on sample curves, analytic and projected derivatives") {
  const Basis s = make_bspline(6, 21);
  const Basis f = make_fourier_plus_linear(12);
  const FunctionalSample x = random_sample(s, 8, 21);
  const std::vector<double> ends{0.0, 1.0};
  const Eigen::MatrixXd alpha_ends = eval(f, ends, 0);
  const auto [x0, x1] = endpoints(x);
  const Eigen::MatrixXd boundary = x1 * alpha_ends.row(1) - x0 * alpha_ends.row(0);
  const Eigen::MatrixXd rhs_term = x.coef * gram(s, f, 0, 1);  // int X alpha'

  const Eigen::MatrixXd analytic = analytic_inner_products(x, f, 1) + rhs_term - boundary;
  CHECK(analytic.cwiseAbs().maxCoeff() < 1e-8);

  // Projected derivative: defect bounded by ||alpha|| * ||P X' - X'||.
  const FunctionalSample d = derivative(x);
  const Eigen::MatrixXd projected = design_inner_products(d, f) + rhs_term - boundary;
  const auto fine = uniform_grid(4001);
  const Eigen::VectorXd proj_err = grid_l2(evaluate(d, fine) - evaluate(x, fine, 1));
  const Eigen::VectorXd alpha_norm = gram(f, f).diagonal().cwiseSqrt();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    for (Eigen::Index j = 0; j < projected.cols(); ++j) {
      CHECK(std::abs(projected(i, j)) <= alpha_norm[j] * proj_err[i] * 1.01 + 1e-10);
    }
  }
}

TEST_CASE("row subsets and validation") {
  const FunctionalSample x = random_sample(make_bspline(4, 5), 5, 2);
  const std::vector<std::size_t> idx{4, 1};
  const FunctionalSample sub = x.rows(idx);
  CHECK(sub.size() == 2);
  CHECK(sub.coef.row(0) == x.coef.row(4));
  CHECK_NOTHROW(validate(x));
  FunctionalSample bad = x;
  bad.coef(0, 0) = std::nan("");
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
}
