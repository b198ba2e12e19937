#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fundrv {

enum class BasisKind { FourierPlusLinear, BSpline };

/// A finite family of real functions on [0, 1].
///
/// FourierPlusLinear orders its functions as
///   1, t, sin(2 pi t), cos(2 pi t), ..., sin(2 pi n t), cos(2 pi n t).
/// BSpline uses a clamped knot vector built from breakpoints 0 = b_0 < ... < b_m = 1,
/// giving (m - 1) + order functions, ordered left to right.
class Basis {
 public:
  static Basis fourier_plus_linear(std::size_t n_pairs);
  static Basis bspline(int order, std::vector<double> breaks);

  BasisKind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return size_; }
  std::size_t n_pairs() const noexcept { return n_pairs_; }
  int order() const noexcept { return order_; }

  // Distinct breakpoints including 0 and 1. For FourierPlusLinear: {0, 1}.
  const std::vector<double>& breaks() const noexcept { return breaks_; }
  // Clamped knot vector (BSpline only).
  const std::vector<double>& knots() const noexcept { return knots_; }

  // Highest derivative order that eval accepts.
  int max_derivative() const noexcept;

  // Short textual form, e.g. "fourier:12" or "bspline:6:21".
  std::string describe() const;

  bool operator==(const Basis& other) const = default;

 private:
  Basis() = default;

  BasisKind kind_ = BasisKind::FourierPlusLinear;
  std::size_t size_ = 0;
  std::size_t n_pairs_ = 0;
  int order_ = 0;
  std::vector<double> breaks_;
  std::vector<double> knots_;
};

Basis make_fourier_plus_linear(std::size_t n_pairs);

// Uniformly spaced breakpoints (n_knots of them, including 0 and 1).
Basis make_bspline(int order, std::size_t n_knots);

// Caller-supplied breakpoints; must start at 0, end at 1, strictly increase.
Basis make_bspline(int order, std::vector<double> breaks);

// "fourier:<pairs>" or "bspline:<order>:<knots>"; inverse of Basis::describe.
Basis parse_basis(const std::string& config);

// Entry (i, j) is the deriv-th derivative of basis function j at points[i].
// Spline derivatives at interior knots are right limits; at t = 1 a left limit.
Eigen::MatrixXd eval(const Basis& basis, std::span<const double> points, int deriv = 0);

// Entry (i, j) = integral over [0,1] of a_i^(deriv_a) * b_j^(deriv_b).
Eigen::MatrixXd gram(const Basis& a, const Basis& b, int deriv_a = 0, int deriv_b = 0);

// Second-derivative roughness penalty, gram(basis, basis, 2, 2).
Eigen::MatrixXd penalty_matrix(const Basis& basis);

// m_j = integral of phi_j over [0,1].
Eigen::VectorXd integral_vector(const Basis& basis);

// mbar_j = integral over [0,1] of integral_0^t phi_j(s) ds dt
//        = integral phi_j - integral t phi_j.
Eigen::VectorXd double_integral_vector(const Basis& basis);

// Integral over [0,1] of t * phi_j.
Eigen::VectorXd first_moment_vector(const Basis& basis);

}  // namespace fundrv
