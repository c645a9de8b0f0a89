// Compiled with -mavx2 (and without -mfma); only reached after a CPUID check.
#include "simstc/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__)
#include <immintrin.h>

namespace simstc::kernels {
namespace {

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_add_pd(vy, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void scale_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) y[i] = a * x[i];
}

void add_avx2(const double* x, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) y[i] += x[i];
}

void relu_avx2(const double* x, double* y, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vx = _mm256_loadu_pd(x + i);
    // mask keeps lanes with x > 0; -0.0 maps to +0.0 like the reference
    _mm256_storeu_pd(y + i, _mm256_and_pd(vx, _mm256_cmp_pd(vx, zero, _CMP_GT_OQ)));
  }
  for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

}  // namespace

const KernelSet* avx2_kernels() {
  static const KernelSet set{Isa::kAvx2, "avx2",    axpy_avx2,
                             scale_avx2, add_avx2, relu_avx2};
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &set : nullptr;
}

}  // namespace simstc::kernels

#else

namespace simstc::kernels {
const KernelSet* avx2_kernels() { return nullptr; }
}  // namespace simstc::kernels

#endif
