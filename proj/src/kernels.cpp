#include "fundrv/kernels.hpp"

#include <stdexcept>

namespace fundrv::kernels {

namespace {

void sq_distances_scalar(const double* rows, std::size_t n, std::size_t k, std::size_t stride, const double* q,
                         double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* r = rows + i * stride;
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double d = r[j] - q[j];
      s += d * d;
    }
    out[i] = s;
  }
}

KernelSums quad_kernel_sums_scalar(const double* d2, const double* y, std::size_t n, double inv_h2) {
  KernelSums s;
  for (std::size_t i = 0; i < n; ++i) {
    const double u2 = d2[i] * inv_h2;
    if (!(u2 < 1.0)) continue;
    const double w = 1.5 * (1.0 - u2);
    s.num += w * y[i];
    s.den += w;
  }
  return s;
}

bool cpu_has_avx2() {
#if defined(FUNDRV_HAVE_AVX2)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

}  // namespace

std::vector<Isa> available_isas() {
  std::vector<Isa> out{Isa::Scalar};
  if (cpu_has_avx2()) out.push_back(Isa::Avx2);
#if defined(FUNDRV_HAVE_NEON)
  out.push_back(Isa::Neon);
#endif
  return out;
}

Isa active_isa() {
  static const Isa isa = available_isas().back();
  return isa;
}

std::string isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "?";
}

void sq_distances(Isa isa, const double* rows, std::size_t n, std::size_t k, std::size_t stride, const double* q,
                  double* out) {
  switch (isa) {
    case Isa::Scalar: return sq_distances_scalar(rows, n, k, stride, q, out);
#if defined(FUNDRV_HAVE_AVX2)
    case Isa::Avx2: return detail::sq_distances_avx2(rows, n, k, stride, q, out);
#endif
#if defined(FUNDRV_HAVE_NEON)
    case Isa::Neon: return detail::sq_distances_neon(rows, n, k, stride, q, out);
#endif
    default: throw std::invalid_argument("kernel variant " + isa_name(isa) + " not built");
  }
}

KernelSums quad_kernel_sums(Isa isa, const double* d2, const double* y, std::size_t n, double inv_h2) {
  switch (isa) {
    case Isa::Scalar: return quad_kernel_sums_scalar(d2, y, n, inv_h2);
#if defined(FUNDRV_HAVE_AVX2)
    case Isa::Avx2: return detail::quad_kernel_sums_avx2(d2, y, n, inv_h2);
#endif
#if defined(FUNDRV_HAVE_NEON)
    case Isa::Neon: return detail::quad_kernel_sums_neon(d2, y, n, inv_h2);
#endif
    default: throw std::invalid_argument("kernel variant " + isa_name(isa) + " not built");
  }
}

}  // namespace fundrv::kernels
