#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <vector>

#include "simstc/kernels.hpp"
#include "simstc/matrix.hpp"
#include "simstc/sparse.hpp"

namespace simstc {
namespace {

using kernels::Isa;
using kernels::KernelSet;

std::vector<const KernelSet*> vector_variants() {
  std::vector<const KernelSet*> out;
  if (const KernelSet* k = kernels::avx2_kernels()) out.push_back(k);
  if (const KernelSet* k = kernels::neon_kernels()) out.push_back(k);
  return out;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::vector<double> random_values(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> normal(0.0, 3.0);
  std::vector<double> v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

class KernelEquivalence : public ::testing::Test {
 protected:
  void SetUp() override {
    if (vector_variants().empty()) GTEST_SKIP() << "no vector kernels on this machine";
  }
};

TEST_F(KernelEquivalence, ElementwiseKernelsMatchScalarBitForBit) {
  const KernelSet& ref = kernels::scalar_kernels();
  std::mt19937_64 rng(1);
  for (const KernelSet* simd : vector_variants()) {
    for (std::size_t n = 0; n < 70; ++n) {
      // Offset by one element so vector loads are unaligned.
      const auto x = random_values(rng, n + 1);
      const auto y0 = random_values(rng, n + 1);
      const double a = std::normal_distribution<double>()(rng);

      auto y_ref = y0, y_simd = y0;
      ref.axpy(a, x.data() + 1, y_ref.data() + 1, n);
      simd->axpy(a, x.data() + 1, y_simd.data() + 1, n);
      EXPECT_TRUE(bit_equal(y_ref, y_simd)) << simd->name << " axpy n=" << n;

      y_ref = y0, y_simd = y0;
      ref.scale(a, x.data() + 1, y_ref.data() + 1, n);
      simd->scale(a, x.data() + 1, y_simd.data() + 1, n);
      EXPECT_TRUE(bit_equal(y_ref, y_simd)) << simd->name << " scale n=" << n;

      y_ref = y0, y_simd = y0;
      ref.add(x.data() + 1, y_ref.data() + 1, n);
      simd->add(x.data() + 1, y_simd.data() + 1, n);
      EXPECT_TRUE(bit_equal(y_ref, y_simd)) << simd->name << " add n=" << n;

      y_ref = y0, y_simd = y0;
      ref.relu(x.data() + 1, y_ref.data() + 1, n);
      simd->relu(x.data() + 1, y_simd.data() + 1, n);
      EXPECT_TRUE(bit_equal(y_ref, y_simd)) << simd->name << " relu n=" << n;
    }
  }
}

TEST_F(KernelEquivalence, ReluSpecialValues) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<double> x = {-0.0, 0.0, nan, inf, -inf, 1e-320, -1e-320, 2.5};
  for (const KernelSet* simd : vector_variants()) {
    std::vector<double> ref(x.size()), got(x.size());
    kernels::scalar_kernels().relu(x.data(), ref.data(), x.size());
    simd->relu(x.data(), got.data(), x.size());
    EXPECT_TRUE(bit_equal(ref, got)) << simd->name;
  }
}

TEST_F(KernelEquivalence, DenseAndSparseProductsAgreeAcrossVariants) {
  std::mt19937_64 rng(2);
  Matrix a(13, 17), b(17, 11);
  a.data = random_values(rng, a.size());
  b.data = random_values(rng, b.size());
  std::vector<SparseEntry> entries;
  for (std::uint32_t r = 0; r < 13; ++r) {
    for (std::uint32_t c = 0; c < 17; c += 1 + (r + c) % 4) entries.push_back({r, c, a(r, c)});
  }
  const SparseMatrix s = SparseMatrix::from_triplets(13, 17, entries);

  const KernelSet& before = kernels::active();
  kernels::select(Isa::kScalar);
  const Matrix ref_nn = matmul(a, b), ref_tn = matmul_tn(b, b), ref_nt = matmul_nt(a, a);
  const Matrix ref_sp = s.multiply(b), ref_spt = s.transpose_multiply(a);
  for (const KernelSet* simd : vector_variants()) {
    kernels::select(simd->isa);
    EXPECT_EQ(matmul(a, b), ref_nn) << simd->name;
    EXPECT_EQ(matmul_tn(b, b), ref_tn) << simd->name;
    EXPECT_EQ(matmul_nt(a, a), ref_nt) << simd->name;
    EXPECT_EQ(s.multiply(b), ref_sp) << simd->name;
    EXPECT_EQ(s.transpose_multiply(a), ref_spt) << simd->name;
  }
  kernels::select(before.isa);
}

TEST(Kernels, ScalarReferenceExamples) {
  const KernelSet& k = kernels::scalar_kernels();
  std::vector<double> x = {1, -2, 3}, y = {10, 20, 30};
  k.axpy(2.0, x.data(), y.data(), 3);
  EXPECT_EQ(y, (std::vector<double>{12, 16, 36}));
  k.scale(-1.0, x.data(), y.data(), 3);
  EXPECT_EQ(y, (std::vector<double>{-1, 2, -3}));
  k.add(x.data(), y.data(), 3);
  EXPECT_EQ(y, (std::vector<double>{0, 0, 0}));
  k.relu(x.data(), y.data(), 3);
  EXPECT_EQ(y, (std::vector<double>{1, 0, 3}));
}

TEST(Kernels, SelectAndNames) {
  const KernelSet& before = kernels::active();
  kernels::select(Isa::kScalar);
  EXPECT_EQ(kernels::active().isa, Isa::kScalar);
  EXPECT_EQ(kernels::isa_name(Isa::kAvx2), "avx2");
  if (kernels::neon_kernels() == nullptr) {
    EXPECT_THROW(kernels::select(Isa::kNeon), std::exception);
  }
  kernels::select(before.isa);
}

}  // namespace
}  // namespace simstc
