#include "simstc/kernels.hpp"

namespace simstc::kernels {
namespace {

void axpy_ref(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_ref(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i];
}

void add_ref(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += x[i];
}

void relu_ref(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

}  // namespace

const KernelSet& scalar_kernels() {
  static const KernelSet set{Isa::kScalar, "scalar", axpy_ref,
                             scale_ref,    add_ref, relu_ref};
  return set;
}

}  // namespace simstc::kernels
