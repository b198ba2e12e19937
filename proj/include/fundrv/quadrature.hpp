#pragma once

#include <span>
#include <vector>

namespace fundrv {

// Nodes and weights of a quadrature rule on some interval.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// n-point Gauss-Legendre rule on [-1, 1], computed by Newton iteration on
// the Legendre recurrence. Exact for polynomials of degree <= 2n - 1.
QuadratureRule gauss_legendre(int n);

// Composite Gauss-Legendre rule: one n-point panel between each pair of
// consecutive breakpoints. Breakpoints must be nondecreasing; zero-width
// panels are skipped.
QuadratureRule composite_gauss_legendre(std::span<const double> breaks, int n = 10);

// Sorted union of breakpoint sets with near-duplicates (within 1e-14) merged.
std::vector<double> merge_breaks(std::span<const double> a, std::span<const double> b);

// Uniform breakpoints 0, 1/panels, ..., 1.
std::vector<double> uniform_breaks(int panels);

}  // namespace fundrv
