#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "simstc/matrix.hpp"
#include "simstc/sparse.hpp"

namespace simstc {

// Reverse-mode differentiation over 2-D double matrices.
//
// A Tensor is a shared handle to a node of a dynamically recorded compute
// graph. Operations on tensors that require gradients record their parents
// and a backward rule; backward() walks the nodes reachable from a scalar in
// reverse topological order. Sparse operands are graph constants.
class Tensor {
 public:
  // Receives the op output value and its gradient, and accumulates into the
  // gradients of the parents (nullptr for parents that need none).
  using BackwardFn = std::function<void(const Matrix& out_value, const Matrix& out_grad,
                                        std::span<Matrix* const> parent_grads)>;

  Tensor() = default;

  static Tensor constant(Matrix value);
  static Tensor parameter(Matrix value);
  // Records a custom op. The backward rule is dropped when no parent needs a
  // gradient or gradient recording is disabled.
  static Tensor make_op(Matrix value, std::vector<Tensor> parents, BackwardFn backward);

  bool defined() const { return node_ != nullptr; }
  const Matrix& value() const;
  // For optimizers: in-place parameter updates.
  Matrix& mutable_value();
  // A zero matrix until backward reaches this tensor.
  const Matrix& grad() const;
  bool requires_grad() const;
  void zero_grad();

  std::size_t rows() const { return value().rows; }
  std::size_t cols() const { return value().cols; }
  // Value of a 1x1 tensor.
  double item() const;

 private:
  struct Node;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  std::shared_ptr<Node> node_;

  friend void backward(const Tensor& loss);
};

// Overwrites the gradients of every tensor reachable from `loss` (a 1x1
// tensor) with d loss / d tensor. Tensors not reachable are left untouched.
void backward(const Tensor& loss);

// While alive, new ops on this thread record no backward rules.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

Tensor matmul(const Tensor& a, const Tensor& b);
// `s` must outlive the backward pass.
Tensor matmul_sparse(const SparseMatrix& s, const Tensor& b);
// Constant dense left operand (node features); `x` must outlive backward.
Tensor matmul_constant(const Matrix& x, const Tensor& b);
Tensor relu(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
// x (n x m) plus a 1 x m row vector on every row
Tensor add_row_bias(const Tensor& x, const Tensor& bias);
Tensor scale(const Tensor& x, double k);
// Divides each row by max(||row||, epsilon). `guarded_rows`, when given,
// receives the number of rows whose norm fell below epsilon.
Tensor row_normalize_l2(const Tensor& x, double epsilon, std::size_t* guarded_rows = nullptr);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor log_softmax_rows(const Tensor& x);
// a * transpose(b): every pairwise row dot product
Tensor dot_products_all_pairs(const Tensor& a, const Tensor& b);
// 1x1 sum of all entries
Tensor sum(const Tensor& x);
// 1x1 sum of x(r, c) over the listed positions
struct Position {
  std::size_t row;
  std::size_t col;
};
Tensor select_sum(const Tensor& x, std::vector<Position> positions);

}  // namespace simstc
