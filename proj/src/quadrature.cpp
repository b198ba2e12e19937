#include "fundrv/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fundrv {

QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  if (n == 1) return {{0.0}, {2.0}};
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Tricomi initial guess for the i-th root, then Newton.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged root.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

QuadratureRule composite_gauss_legendre(std::span<const double> breaks, int n) {
  const QuadratureRule ref = gauss_legendre(n);
  QuadratureRule out;
  if (breaks.size() < 2) return out;
  out.nodes.reserve((breaks.size() - 1) * n);
  out.weights.reserve((breaks.size() - 1) * n);
  for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
    const double a = breaks[p];
    const double b = breaks[p + 1];
    if (b < a) throw std::invalid_argument("composite_gauss_legendre: breaks must be nondecreasing");
    if (b == a) continue;
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    for (int i = 0; i < n; ++i) {
      out.nodes.push_back(mid + half * ref.nodes[i]);
      out.weights.push_back(half * ref.weights[i]);
    }
  }
  return out;
}

std::vector<double> merge_breaks(std::span<const double> a, std::span<const double> b) {
  std::vector<double> all(a.begin(), a.end());
  all.insert(all.end(), b.begin(), b.end());
  std::sort(all.begin(), all.end());
  std::vector<double> out;
  for (double v : all) {
    if (out.empty() || v - out.back() > 1e-14) out.push_back(v);
  }
  return out;
}

std::vector<double> uniform_breaks(int panels) {
  std::vector<double> out(panels + 1);
  for (int i = 0; i <= panels; ++i) out[i] = static_cast<double>(i) / panels;
  out.back() = 1.0;
  return out;
}

}  // namespace fundrv
