#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace fundrv::kernels {

enum class Isa { Scalar, Avx2, Neon };

// Best variant this CPU and build support.
Isa active_isa();
// Every variant usable here; Scalar always first.
std::vector<Isa> available_isas();
std::string isa_name(Isa isa);

/// out[i] = sum_j (rows[i * stride + j] - q[j])^2 for i < n, j < k.
void sq_distances(Isa isa, const double* rows, std::size_t n, std::size_t k, std::size_t stride, const double* q,
                  double* out);

struct KernelSums {
  double num = 0.0;  // sum w_i y_i
  double den = 0.0;  // sum w_i
};

/// Quadratic kernel weights w_i = 1.5 (1 - d2[i] * inv_h2), zero once d2 * inv_h2 >= 1
/// or is NaN (an infinite distance with inv_h2 = 0).
KernelSums quad_kernel_sums(Isa isa, const double* d2, const double* y, std::size_t n, double inv_h2);

inline void sq_distances(const double* rows, std::size_t n, std::size_t k, std::size_t stride, const double* q,
                         double* out) {
  sq_distances(active_isa(), rows, n, k, stride, q, out);
}

inline KernelSums quad_kernel_sums(const double* d2, const double* y, std::size_t n, double inv_h2) {
  return quad_kernel_sums(active_isa(), d2, y, n, inv_h2);
}

namespace detail {
void sq_distances_avx2(const double* rows, std::size_t n, std::size_t k, std::size_t stride, const double* q,
                       double* out);
KernelSums quad_kernel_sums_avx2(const double* d2, const double* y, std::size_t n, double inv_h2);
void sq_distances_neon(const double* rows, std::size_t n, std::size_t k, std::size_t stride, const double* q,
                       double* out);
KernelSums quad_kernel_sums_neon(const double* d2, const double* y, std::size_t n, double inv_h2);
}  // namespace detail

}  // namespace fundrv::kernels
