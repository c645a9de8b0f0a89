#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Data-parallel inner loops used by the dense and sparse products.
//
// Every kernel has a scalar reference implementation; vector variants
// (AVX2 on x86-64, NEON on AArch64) are selected at runtime. Elementwise
// kernels (axpy, scale, add, relu) are bit-identical to the reference
// because they perform the same IEEE operations lane by lane. The engine
// is written in terms of these row updates only (no horizontal reductions),
// so training results do not depend on which variant is active.
namespace simstc::kernels {

enum class Isa { kScalar, kAvx2, kNeon };

struct KernelSet {
  Isa isa;
  const char* name;
  // y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // y[i] = a * x[i]
  void (*scale)(double a, const double* x, double* y, std::size_t n);
  // y[i] += x[i]
  void (*add)(const double* x, double* y, std::size_t n);
  // y[i] = x[i] > 0 ? x[i] : 0
  void (*relu)(const double* x, double* y, std::size_t n);
};

const KernelSet& scalar_kernels();

// Returns nullptr when the variant is not compiled in or the CPU lacks it.
const KernelSet* avx2_kernels();
const KernelSet* neon_kernels();

// The kernel set used by the engine. Chosen once, on first use: the best
// supported variant, unless SIMSTC_SIMD=scalar|avx2|neon overrides it.
const KernelSet& active();

// Overrides the runtime choice (tests and benchmarks). Throws simstc::Error
// if the requested variant is unavailable.
void select(Isa isa);

std::string_view isa_name(Isa isa);

// span conveniences over the active set
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(a, x.data(), y.data(), y.size());
}

}  // namespace simstc::kernels
