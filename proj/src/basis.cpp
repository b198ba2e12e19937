#include "fundrv/basis.hpp"

#include "fundrv/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fundrv {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Panel count for quadrature involving trigonometric functions.
constexpr int kTrigPanels = 50;
constexpr int kNodesPerPanel = 10;

void check_point(double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw std::domain_error("basis evaluation point outside [0, 1]: " + std::to_string(t));
  }
}

// d-th derivative of the Fourier-plus-linear function with index j at t.
double fourier_value(std::size_t j, double t, int d) {
  if (j == 0) return d == 0 ? 1.0 : 0.0;
  if (j == 1) {
    if (d == 0) return t;
    return d == 1 ? 1.0 : 0.0;
  }
  const std::size_t k = (j - 2) / 2 + 1;
  const bool is_sin = ((j - 2) % 2) == 0;
  const double w = kTwoPi * static_cast<double>(k);
  // d/dt^d sin(wt) = w^d sin(wt + d pi/2); likewise for cos.
  const double phase = w * t + 0.5 * std::numbers::pi * static_cast<double>(d % 4);
  const double amp = std::pow(w, d);
  return amp * (is_sin ? std::sin(phase) : std::cos(phase));
}

// Derivative of a Fourier-plus-linear function, as a single closed-form term.
struct TrigTerm {
  enum class Kind { Zero, Constant, Linear, Sin, Cos } kind = Kind::Zero;
  double amp = 0.0;
  std::size_t freq = 0;
};

TrigTerm fourier_term(std::size_t j, int d) {
  using K = TrigTerm::Kind;
  if (j == 0) return d == 0 ? TrigTerm{K::Constant, 1.0, 0} : TrigTerm{};
  if (j == 1) {
    if (d == 0) return {K::Linear, 1.0, 0};
    return d == 1 ? TrigTerm{K::Constant, 1.0, 0} : TrigTerm{};
  }
  const std::size_t k = (j - 2) / 2 + 1;
  const bool is_sin = ((j - 2) % 2) == 0;
  const double amp = std::pow(kTwoPi * static_cast<double>(k), d);
  // sin -> cos -> -sin -> -cos -> sin ...
  const int r = d % 4;
  if (is_sin) {
    switch (r) {
      case 0: return {K::Sin, amp, k};
      case 1: return {K::Cos, amp, k};
      case 2: return {K::Sin, -amp, k};
      default: return {K::Cos, -amp, k};
    }
  }
  switch (r) {
    case 0: return {K::Cos, amp, k};
    case 1: return {K::Sin, -amp, k};
    case 2: return {K::Cos, -amp, k};
    default: return {K::Sin, amp, k};
  }
}

// Integral over [0,1] of the product of two closed-form terms with integer
// frequencies.
double integrate_product(const TrigTerm& a, const TrigTerm& b) {
  using K = TrigTerm::Kind;
  if (a.kind == K::Zero || b.kind == K::Zero) return 0.0;
  const TrigTerm& lo = static_cast<int>(a.kind) <= static_cast<int>(b.kind) ? a : b;
  const TrigTerm& hi = &lo == &a ? b : a;
  const double c = lo.amp * hi.amp;
  switch (lo.kind) {
    case K::Constant:
      switch (hi.kind) {
        case K::Constant: return c;
        case K::Linear: return c / 2.0;
        default: return 0.0;
      }
    case K::Linear:
      switch (hi.kind) {
        case K::Linear: return c / 3.0;
        case K::Sin: return -c / (kTwoPi * static_cast<double>(hi.freq));
        default: return 0.0;
      }
    case K::Sin:
      return (hi.kind == K::Sin && hi.freq == lo.freq) ? c / 2.0 : 0.0;
    case K::Cos:
      return (hi.kind == K::Cos && hi.freq == lo.freq) ? c / 2.0 : 0.0;
    default:
      return 0.0;
  }
}

std::size_t find_span(const std::vector<double>& knots, std::size_t n_basis, int degree, double t) {
  const auto p = static_cast<std::size_t>(degree);
  if (t >= knots[n_basis]) return n_basis - 1;
  // Largest s in [p, n_basis-1] with knots[s] <= t.
  auto it = std::upper_bound(knots.begin() + p, knots.begin() + n_basis, t);
  return static_cast<std::size_t>(it - knots.begin()) - 1;
}

// Nonzero basis functions and derivatives at t on span s (Piegl & Tiller A2.3).
// ders(k, r) holds the k-th derivative of basis function s - p + r.
Eigen::MatrixXd bspline_derivs(const std::vector<double>& U, std::size_t s, int p, double u, int n) {
  Eigen::MatrixXd ndu(p + 1, p + 1);
  std::vector<double> left(p + 1), right(p + 1);
  ndu(0, 0) = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = u - U[s + 1 - j];
    right[j] = U[s + j] - u;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu(j, r) = right[r + 1] + left[j - r];
      const double temp = ndu(r, j - 1) / ndu(j, r);
      ndu(r, j) = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu(j, j) = saved;
  }
  Eigen::MatrixXd ders = Eigen::MatrixXd::Zero(n + 1, p + 1);
  for (int j = 0; j <= p; ++j) ders(0, j) = ndu(j, p);
  Eigen::MatrixXd a(2, p + 1);
  for (int r = 0; r <= p; ++r) {
    int s1 = 0;
    int s2 = 1;
    a(0, 0) = 1.0;
    for (int k = 1; k <= n; ++k) {
      double d = 0.0;
      const int rk = r - k;
      const int pk = p - k;
      if (r >= k) {
        a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
        d = a(s2, 0) * ndu(rk, pk);
      }
      const int j1 = rk >= -1 ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
        d += a(s2, j) * ndu(rk + j, pk);
      }
      if (r <= pk) {
        a(s2, k) = -a(s1, k - 1) / ndu(pk + 1, r);
        d += a(s2, k) * ndu(r, pk);
      }
      ders(k, r) = d;
      std::swap(s1, s2);
    }
  }
  double factor = p;
  for (int k = 1; k <= n; ++k) {
    ders.row(k) *= factor;
    factor *= (p - k);
  }
  return ders;
}

QuadratureRule rule_for(const Basis& a, const Basis& b) {
  std::vector<double> br = merge_breaks(a.breaks(), b.breaks());
  if (a.kind() == BasisKind::FourierPlusLinear || b.kind() == BasisKind::FourierPlusLinear) {
    br = merge_breaks(br, uniform_breaks(kTrigPanels));
  }
  return composite_gauss_legendre(br, kNodesPerPanel);
}

Eigen::VectorXd quadrature_moment(const Basis& basis, int power) {
  const QuadratureRule q = rule_for(basis, basis);
  const Eigen::MatrixXd e = eval(basis, q.nodes, 0);
  Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(q.weights.data(), q.weights.size());
  if (power == 1) {
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] *= q.nodes[i];
  }
  return e.transpose() * w;
}

}  // namespace

Basis Basis::fourier_plus_linear(std::size_t n_pairs) {
  if (n_pairs == 0) throw std::invalid_argument("fourier basis needs at least one sin/cos pair");
  Basis b;
  b.kind_ = BasisKind::FourierPlusLinear;
  b.n_pairs_ = n_pairs;
  b.size_ = 2 * n_pairs + 2;
  b.breaks_ = {0.0, 1.0};
  return b;
}

Basis Basis::bspline(int order, std::vector<double> breaks) {
  if (order < 2) throw std::invalid_argument("bspline order must be >= 2");
  if (breaks.size() < 2) throw std::invalid_argument("bspline needs at least 2 knots");
  if (breaks.front() != 0.0 || breaks.back() != 1.0) {
    throw std::invalid_argument("bspline breakpoints must start at 0 and end at 1");
  }
  for (std::size_t i = 1; i < breaks.size(); ++i) {
    if (!(breaks[i] > breaks[i - 1])) {
      throw std::invalid_argument("bspline breakpoints must be strictly increasing");
    }
  }
  Basis b;
  b.kind_ = BasisKind::BSpline;
  b.order_ = order;
  b.size_ = breaks.size() - 2 + static_cast<std::size_t>(order);
  b.knots_.assign(order, 0.0);
  b.knots_.insert(b.knots_.end(), breaks.begin() + 1, breaks.end() - 1);
  b.knots_.insert(b.knots_.end(), order, 1.0);
  b.breaks_ = std::move(breaks);
  return b;
}

int Basis::max_derivative() const noexcept {
  return kind_ == BasisKind::BSpline ? order_ - 1 : 64;
}

std::string Basis::describe() const {
  if (kind_ == BasisKind::FourierPlusLinear) return "fourier:" + std::to_string(n_pairs_);
  return "bspline:" + std::to_string(order_) + ":" + std::to_string(breaks_.size());
}

Basis make_fourier_plus_linear(std::size_t n_pairs) { return Basis::fourier_plus_linear(n_pairs); }

Basis make_bspline(int order, std::size_t n_knots) {
  if (n_knots < 2) throw std::invalid_argument("bspline needs at least 2 knots");
  return Basis::bspline(order, uniform_breaks(static_cast<int>(n_knots - 1)));
}

Basis make_bspline(int order, std::vector<double> breaks) { return Basis::bspline(order, std::move(breaks)); }

Basis parse_basis(const std::string& config) {
  std::vector<std::string> parts;
  std::string::size_type start = 0;
  for (;;) {
    const auto colon = config.find(':', start);
    parts.push_back(config.substr(start, colon == std::string::npos ? std::string::npos : colon - start));
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  auto number = [&](const std::string& s) {
    if (s.empty() || s.size() > 4 || s.find_first_not_of("0123456789") != std::string::npos) {
      throw std::invalid_argument("malformed basis '" + config + "' (expected fourier:N or bspline:ORDER:KNOTS)");
    }
    return std::stoi(s);
  };
  if (parts[0] == "fourier" && parts.size() == 2) {
    const int pairs = number(parts[1]);
    if (pairs < 1) throw std::invalid_argument("fourier basis needs at least one pair");
    return make_fourier_plus_linear(static_cast<std::size_t>(pairs));
  }
  if (parts[0] == "bspline" && parts.size() == 3) {
    const int order = number(parts[1]);
    const int knots = number(parts[2]);
    if (order < 1 || knots < 2) throw std::invalid_argument("bspline needs order >= 1 and at least 2 knots");
    return make_bspline(order, static_cast<std::size_t>(knots));
  }
  throw std::invalid_argument("malformed basis '" + config + "' (expected fourier:N or bspline:ORDER:KNOTS)");
}

Eigen::MatrixXd eval(const Basis& basis, std::span<const double> points, int deriv) {
  if (deriv < 0 || deriv > basis.max_derivative()) {
    throw std::invalid_argument("derivative order " + std::to_string(deriv) + " not supported by basis " +
                                basis.describe());
  }
  const auto n = static_cast<Eigen::Index>(points.size());
  const auto k = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, k);
  if (basis.kind() == BasisKind::FourierPlusLinear) {
    for (Eigen::Index i = 0; i < n; ++i) {
      check_point(points[i]);
      for (Eigen::Index j = 0; j < k; ++j) out(i, j) = fourier_value(j, points[i], deriv);
    }
    return out;
  }
  const int p = basis.order() - 1;
  const auto& knots = basis.knots();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = points[i];
    check_point(t);
    const std::size_t s = find_span(knots, basis.size(), p, t);
    const Eigen::MatrixXd d = bspline_derivs(knots, s, p, t, deriv);
    for (int r = 0; r <= p; ++r) out(i, static_cast<Eigen::Index>(s) - p + r) = d(deriv, r);
  }
  return out;
}

Eigen::MatrixXd gram(const Basis& a, const Basis& b, int deriv_a, int deriv_b) {
  if (deriv_a < 0 || deriv_a > a.max_derivative() || deriv_b < 0 || deriv_b > b.max_derivative()) {
    throw std::invalid_argument("gram: derivative order not supported by basis");
  }
  const auto ka = static_cast<Eigen::Index>(a.size());
  const auto kb = static_cast<Eigen::Index>(b.size());
  if (a.kind() == BasisKind::FourierPlusLinear && b.kind() == BasisKind::FourierPlusLinear) {
    Eigen::MatrixXd g(ka, kb);
    for (Eigen::Index i = 0; i < ka; ++i) {
      const TrigTerm ti = fourier_term(i, deriv_a);
      for (Eigen::Index j = 0; j < kb; ++j) g(i, j) = integrate_product(ti, fourier_term(j, deriv_b));
    }
    return g;
  }
  const QuadratureRule q = rule_for(a, b);
  const Eigen::MatrixXd ea = eval(a, q.nodes, deriv_a);
  const Eigen::MatrixXd eb = eval(b, q.nodes, deriv_b);
  const Eigen::Map<const Eigen::VectorXd> w(q.weights.data(), static_cast<Eigen::Index>(q.weights.size()));
  Eigen::MatrixXd g = ea.transpose() * w.asDiagonal() * eb;
  if (a == b && deriv_a == deriv_b) g = 0.5 * (g + g.transpose()).eval();
  return g;
}

Eigen::MatrixXd penalty_matrix(const Basis& basis) { return gram(basis, basis, 2, 2); }

Eigen::VectorXd integral_vector(const Basis& basis) {
  if (basis.kind() == BasisKind::FourierPlusLinear) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.size()));
    m[0] = 1.0;
    m[1] = 0.5;
    return m;
  }
  return quadrature_moment(basis, 0);
}

Eigen::VectorXd first_moment_vector(const Basis& basis) {
  if (basis.kind() == BasisKind::FourierPlusLinear) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.size()));
    m[0] = 0.5;
    m[1] = 1.0 / 3.0;
    for (std::size_t k = 1; k <= basis.n_pairs(); ++k) {
      m[static_cast<Eigen::Index>(2 * k)] = -1.0 / (kTwoPi * static_cast<double>(k));
    }
    return m;
  }
  return quadrature_moment(basis, 1);
}

Eigen::VectorXd double_integral_vector(const Basis& basis) {
  return integral_vector(basis) - first_moment_vector(basis);
}

}  // namespace fundrv
