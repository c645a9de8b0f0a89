#include <atomic>
#include <cstdlib>
#include <string>

#include "simstc/error.hpp"
#include "simstc/kernels.hpp"

namespace simstc::kernels {
namespace {

const KernelSet* lookup(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return &scalar_kernels();
    case Isa::kAvx2:
      return avx2_kernels();
    case Isa::kNeon:
      return neon_kernels();
  }
  return nullptr;
}

const KernelSet* initial_choice() {
  if (const char* env = std::getenv("SIMSTC_SIMD"); env != nullptr && *env != '\0') {
    const std::string want(env);
    const KernelSet* set = nullptr;
    if (want == "scalar") set = lookup(Isa::kScalar);
    else if (want == "avx2") set = lookup(Isa::kAvx2);
    else if (want == "neon") set = lookup(Isa::kNeon);
    if (set == nullptr) {
      throw Error("kernels.unavailable", "SIMSTC_SIMD=" + want + " is not available on this CPU");
    }
    return set;
  }
  if (const KernelSet* set = avx2_kernels()) return set;
  if (const KernelSet* set = neon_kernels()) return set;
  return &scalar_kernels();
}

std::atomic<const KernelSet*>& current() {
  static std::atomic<const KernelSet*> set{initial_choice()};
  return set;
}

}  // namespace

const KernelSet& active() { return *current().load(std::memory_order_acquire); }

void select(Isa isa) {
  const KernelSet* set = lookup(isa);
  if (set == nullptr) {
    throw Error("kernels.unavailable",
                "kernel variant " + std::string(isa_name(isa)) + " is not available");
  }
  current().store(set, std::memory_order_release);
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
    case Isa::kNeon:
      return "neon";
  }
  return "unknown";
}

}  // namespace simstc::kernels
