#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "simstc/error.hpp"
#include "simstc/sparse.hpp"
#include "simstc/tensor.hpp"

namespace simstc {
namespace {

Matrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c) {
  std::normal_distribution<double> normal;
  Matrix m(r, c);
  for (double& x : m.data) x = normal(rng);
  return m;
}

void expect_near(const Matrix& a, const Matrix& b, double tol) {
  ASSERT_TRUE(a.same_shape(b));
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a.data[k], b.data[k], tol) << "entry " << k;
}

TEST(TensorOps, Examples) {
  const Matrix b = Matrix::from_rows({{1, 2}, {3, 4}});
  EXPECT_EQ(matmul(Tensor::constant(Matrix::identity(2)), Tensor::constant(b)).value(), b);

  const SparseMatrix s = SparseMatrix::from_dense(Matrix::from_rows({{0.5, 0.5}, {0.5, 0.5}}));
  EXPECT_EQ(matmul_sparse(s, Tensor::constant(Matrix::from_rows({{2}, {4}}))).value(),
            Matrix::from_rows({{3}, {3}}));

  EXPECT_EQ(relu(Tensor::constant(Matrix::from_rows({{-1, 0, 2}}))).value(), Matrix::from_rows({{0, 0, 2}}));
  expect_near(row_normalize_l2(Tensor::constant(Matrix::from_rows({{3, 4}})), 1e-12).value(),
              Matrix::from_rows({{0.6, 0.8}}), 1e-15);
  expect_near(log_softmax_rows(Tensor::constant(Matrix::from_rows({{0, 0}}))).value(),
              Matrix::from_rows({{-std::log(2.0), -std::log(2.0)}}), 1e-15);
  EXPECT_EQ(concat_cols({Tensor::constant(Matrix::from_rows({{1}, {2}})),
                         Tensor::constant(Matrix::from_rows({{3, 4}, {5, 6}}))})
                .value(),
            Matrix::from_rows({{1, 3, 4}, {2, 5, 6}}));
  EXPECT_EQ(scale(Tensor::constant(b), -2.0).value(), Matrix::from_rows({{-2, -4}, {-6, -8}}));
  EXPECT_EQ(add(Tensor::constant(b), Tensor::constant(b)).value(), Matrix::from_rows({{2, 4}, {6, 8}}));
  EXPECT_EQ(add_row_bias(Tensor::constant(b), Tensor::constant(Matrix::from_rows({{10, 20}}))).value(),
            Matrix::from_rows({{11, 22}, {13, 24}}));
  EXPECT_EQ(dot_products_all_pairs(Tensor::constant(b), Tensor::constant(b)).value(),
            Matrix::from_rows({{5, 11}, {11, 25}}));
  EXPECT_EQ(sum(Tensor::constant(b)).item(), 10.0);
  EXPECT_EQ(select_sum(Tensor::constant(b), {{0, 1}, {1, 0}}).item(), 5.0);
}

TEST(TensorOps, LogSoftmaxIsStableForLargeInputs) {
  const Matrix out = log_softmax_rows(Tensor::constant(Matrix::from_rows({{1000, 1000}, {-1000, 0}}))).value();
  EXPECT_TRUE(out.all_finite());
  EXPECT_NEAR(out(0, 0), -std::log(2.0), 1e-15);
  EXPECT_NEAR(out(1, 1), 0.0, 1e-15);
}

TEST(TensorOps, NormalizationGuardCountsZeroRows) {
  std::size_t guarded = 0;
  const Matrix out =
      row_normalize_l2(Tensor::constant(Matrix::from_rows({{0, 0}, {1, 0}})), 1e-12, &guarded).value();
  EXPECT_EQ(guarded, 1u);
  EXPECT_EQ(out(0, 0), 0.0);
  EXPECT_EQ(out(1, 0), 1.0);
}

TEST(TensorOps, SparseProductMatchesDenseOracle) {
  std::mt19937_64 rng(4);
  Matrix dense = random_matrix(rng, 7, 5);
  for (std::size_t k = 0; k < dense.size(); k += 3) dense.data[k] = 0.0;
  const Matrix b = random_matrix(rng, 5, 3);
  expect_near(matmul_sparse(SparseMatrix::from_dense(dense), Tensor::constant(b)).value(), matmul(dense, b), 1e-12);
}

TEST(TensorOps, ShapeMismatchThrows) {
  EXPECT_THROW(matmul(Tensor::constant(Matrix(2, 3)), Tensor::constant(Matrix(2, 3))), Error);
  EXPECT_THROW(add(Tensor::constant(Matrix(2, 3)), Tensor::constant(Matrix(3, 2))), Error);
}

TEST(Backward, Examples) {
  Tensor x = Tensor::parameter(Matrix::from_rows({{1, 2}, {3, 4}}));
  backward(sum(x));
  EXPECT_EQ(x.grad(), Matrix(2, 2, 1.0));

  Tensor y = Tensor::parameter(Matrix::from_rows({{-1, 2}}));
  backward(sum(relu(y)));
  EXPECT_EQ(y.grad(), Matrix::from_rows({{0, 1}}));

  Tensor z = Tensor::parameter(Matrix::from_rows({{0, 0}}));
  backward(sum(relu(z)));
  EXPECT_EQ(z.grad(), Matrix::from_rows({{0, 0}}));  // derivative at 0 is 0
}

TEST(Backward, NonScalarLossThrows) {
  Tensor x = Tensor::parameter(Matrix(2, 2, 1.0));
  EXPECT_THROW(backward(x), Error);
}

TEST(Backward, UnusedLeafGradientIsZero) {
  Tensor used = Tensor::parameter(Matrix(2, 2, 1.0));
  Tensor unused = Tensor::parameter(Matrix(2, 2, 1.0));
  backward(sum(scale(used, 3.0)));
  EXPECT_EQ(unused.grad(), Matrix(2, 2));
}

TEST(Backward, RepeatedBackwardDoesNotAccumulate) {
  std::mt19937_64 rng(5);
  Tensor w = Tensor::parameter(random_matrix(rng, 3, 3));
  auto loss = [&] { return sum(log_softmax_rows(matmul(w, w))); };
  backward(loss());
  const Matrix first = w.grad();
  backward(loss());
  EXPECT_EQ(w.grad(), first);
}

TEST(Backward, SharedSubexpressionAccumulates) {
  Tensor x = Tensor::parameter(Matrix::from_rows({{2}}));
  backward(sum(add(x, scale(x, 3.0))));
  EXPECT_EQ(x.grad(), Matrix::from_rows({{4}}));
}

TEST(Backward, NoGradGuardRecordsNothing) {
  Tensor x = Tensor::parameter(Matrix(1, 1, 2.0));
  Tensor y;
  {
    NoGradGuard guard;
    y = scale(x, 2.0);
  }
  EXPECT_FALSE(y.requires_grad());
}

// Finite-difference check of every op through a composite scalar function.
TEST(Backward, FiniteDifferencesAcrossOps) {
  std::mt19937_64 rng(6);
  Matrix dense = random_matrix(rng, 4, 5);
  for (std::size_t k = 0; k < dense.size(); k += 2) dense.data[k] = 0.0;
  const SparseMatrix s = SparseMatrix::from_dense(dense);
  const Matrix features = random_matrix(rng, 5, 3);
  std::vector<NamedParameter> params = {
      {"w", Tensor::parameter(random_matrix(rng, 3, 4))},
      {"bias", Tensor::parameter(random_matrix(rng, 1, 4))},
      {"v", Tensor::parameter(random_matrix(rng, 4, 3))},
      {"u", Tensor::parameter(random_matrix(rng, 4, 2))},
  };
  auto loss = [&] {
    const Tensor h = add_row_bias(matmul_sparse(s, matmul_constant(features, params[0].tensor)), params[1].tensor);
    const Tensor a = row_normalize_l2(relu(h), 1e-12);
    const Tensor b = row_normalize_l2(matmul(h, params[2].tensor), 1e-12);
    const Tensor sims = dot_products_all_pairs(matmul(a, params[2].tensor), b);
    const Tensor logits = concat_cols({scale(sims, 0.5), matmul(a, params[3].tensor)});
    return add(sum(scale(log_softmax_rows(logits), -1.0)), select_sum(sims, {{0, 1}, {2, 2}}));
  };
  const auto report = testing::check_gradients(loss, params, 1e-5, 1e-8);
  EXPECT_LT(report.max_relative_error, 1e-5)
      << report.worst_parameter << "[" << report.worst_index << "] analytic " << report.worst_analytic
      << " numeric " << report.worst_numeric;
}

TEST(Backward, Deterministic) {
  std::mt19937_64 rng(7);
  const Matrix init = random_matrix(rng, 6, 6);
  auto run = [&] {
    Tensor w = Tensor::parameter(init);
    backward(sum(log_softmax_rows(matmul(w, relu(w)))));
    return w.grad();
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace simstc
