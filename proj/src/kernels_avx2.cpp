#include "fundrv/kernels.hpp"

#include <immintrin.h>

namespace fundrv::kernels::detail {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

void sq_distances_avx2(const double* rows, std::size_t n, std::size_t k, std::size_t stride, const double* q,
                       double* out) {
  const std::size_t k4 = k & ~std::size_t{3};
  for (std::size_t i = 0; i < n; ++i) {
    const double* r = rows + i * stride;
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t j = 0; j < k4; j += 4) {
      const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(r + j), _mm256_loadu_pd(q + j));
      acc = _mm256_fmadd_pd(d, d, acc);
    }
    double s = hsum(acc);
    for (std::size_t j = k4; j < k; ++j) {
      const double d = r[j] - q[j];
      s += d * d;
    }
    out[i] = s;
  }
}

KernelSums quad_kernel_sums_avx2(const double* d2, const double* y, std::size_t n, double inv_h2) {
  const std::size_t n4 = n & ~std::size_t{3};
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d scale = _mm256_set1_pd(inv_h2);
  __m256d num = zero, den = zero;
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d u2 = _mm256_mul_pd(_mm256_loadu_pd(d2 + i), scale);
    // max_pd returns its second operand when the first is NaN.
    const __m256d w = _mm256_max_pd(_mm256_sub_pd(one, u2), zero);
    num = _mm256_fmadd_pd(w, _mm256_loadu_pd(y + i), num);
    den = _mm256_add_pd(den, w);
  }
  KernelSums s{hsum(num), hsum(den)};
  for (std::size_t i = n4; i < n; ++i) {
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
