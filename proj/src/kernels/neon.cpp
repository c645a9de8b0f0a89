#include "simstc/kernels.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>

namespace simstc::kernels {
namespace {

// vmulq + vaddq rather than vfmaq so results match the scalar reference.
void axpy_neon(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void scale_neon(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vmulq_f64(va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] = a * x[i];
}

void add_neon(const double* x, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += x[i];
}

void relu_neon(const double* x, double* y, std::size_t n) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t vx = vld1q_f64(x + i);
    const uint64x2_t keep = vcgtq_f64(vx, zero);
    vst1q_f64(y + i, vreinterpretq_f64_u64(vandq_u64(vreinterpretq_u64_f64(vx), keep)));
  }
  for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

}  // namespace

const KernelSet* neon_kernels() {
  static const KernelSet set{Isa::kNeon, "neon",    axpy_neon,
                             scale_neon, add_neon, relu_neon};
  return &set;
}

}  // namespace simstc::kernels

#else

namespace simstc::kernels {
const KernelSet* neon_kernels() { return nullptr; }
}  // namespace simstc::kernels

#endif
