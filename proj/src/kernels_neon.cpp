#include "fundrv/kernels.hpp"

#include <arm_neon.h>

namespace fundrv::kernels::detail {

void sq_distances_neon(const double* rows, std::size_t n, std::size_t k, std::size_t stride, const double* q,
                       double* out) {
  const std::size_t k2 = k & ~std::size_t{1};
  for (std::size_t i = 0; i < n; ++i) {
    const double* r = rows + i * stride;
    float64x2_t acc = vdupq_n_f64(0.0);
    for (std::size_t j = 0; j < k2; j += 2) {
      const float64x2_t d = vsubq_f64(vld1q_f64(r + j), vld1q_f64(q + j));
      acc = vfmaq_f64(acc, d, d);
    }
    double s = vaddvq_f64(acc);
    for (std::size_t j = k2; j < k; ++j) {
      const double d = r[j] - q[j];
      s += d * d;
    }
    out[i] = s;
  }
}

KernelSums quad_kernel_sums_neon(const double* d2, const double* y, std::size_t n, double inv_h2) {
  const std::size_t n2 = n & ~std::size_t{1};
  const float64x2_t one = vdupq_n_f64(1.0);
  const float64x2_t zero = vdupq_n_f64(0.0);
  float64x2_t num = zero, den = zero;
  for (std::size_t i = 0; i < n2; i += 2) {
    const float64x2_t u2 = vmulq_n_f64(vld1q_f64(d2 + i), inv_h2);
    const float64x2_t w = vmaxnmq_f64(vsubq_f64(one, u2), zero);
    num = vfmaq_f64(num, w, vld1q_f64(y + i));
    den = vaddq_f64(den, w);
  }
  KernelSums s{vaddvq_f64(num), vaddvq_f64(den)};
  for (std::size_t i = n2; i < n; ++i) {
    const double u2 = d2[i] * inv_h2;
    if (!(u2 < 1.0)) continue;
    s.num += (1.0 - u2) * y[i];
    s.den += 1.0 - u2;
  }
  s.num *= 1.5;
  s.den *= 1.5;
  return s;
}

}  // namespace fundrv::kernels::detail
