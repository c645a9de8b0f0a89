#include "simstc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

#include "simstc/error.hpp"
#include "simstc/kernels.hpp"

namespace simstc {

struct Tensor::Node {
  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  bool has_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  BackwardFn backward;
};

namespace {

thread_local bool grad_enabled = true;

void shape_error(const char* op, const Matrix& a, const Matrix& b) {
  throw Error("tensor.shape", std::string(op) + ": incompatible shapes " + std::to_string(a.rows) +
                                  "x" + std::to_string(a.cols) + " and " + std::to_string(b.rows) +
                                  "x" + std::to_string(b.cols));
}

void accumulate(Matrix* dst, const Matrix& src) {
  if (dst != nullptr) kernels::active().add(src.data.data(), dst->data.data(), src.size());
}

}  // namespace

NoGradGuard::NoGradGuard() : previous_(grad_enabled) { grad_enabled = false; }
NoGradGuard::~NoGradGuard() { grad_enabled = previous_; }

Tensor Tensor::constant(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Tensor(std::move(node));
}

Tensor Tensor::parameter(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Tensor(std::move(node));
}

Tensor Tensor::make_op(Matrix value, std::vector<Tensor> parents, BackwardFn backward_fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (grad_enabled) {
    const bool needs = std::any_of(parents.begin(), parents.end(),
                                   [](const Tensor& p) { return p.requires_grad(); });
    if (needs) {
      node->requires_grad = true;
      node->backward = std::move(backward_fn);
      for (auto& p : parents) node->parents.push_back(p.node_);
    }
  }
  return Tensor(std::move(node));
}

const Matrix& Tensor::value() const { return node_->value; }
Matrix& Tensor::mutable_value() { return node_->value; }

const Matrix& Tensor::grad() const {
  if (!node_->has_grad) {
    node_->grad = Matrix(node_->value.rows, node_->value.cols);
    node_->has_grad = true;
  }
  return node_->grad;
}

bool Tensor::requires_grad() const { return node_ != nullptr && node_->requires_grad; }

void Tensor::zero_grad() {
  node_->grad = Matrix(node_->value.rows, node_->value.cols);
  node_->has_grad = true;
}

double Tensor::item() const {
  if (value().rows != 1 || value().cols != 1) {
    throw Error("tensor.shape", "item() on a non-scalar tensor");
  }
  return value().data[0];
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.value().rows != 1 || loss.value().cols != 1) {
    throw Error("tensor.non_scalar", "backward() needs a 1x1 loss tensor");
  }
  using Node = Tensor::Node;
  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  Node* root = loss.node_.get();
  if (!root->requires_grad) return;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (Node* n : order) {
    n->grad = Matrix(n->value.rows, n->value.cols);
    n->has_grad = true;
  }
  root->grad.data[0] = 1.0;
  std::vector<Matrix*> parent_grads;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (!n->backward) continue;
    parent_grads.clear();
    for (const auto& p : n->parents) parent_grads.push_back(p->requires_grad ? &p->grad : nullptr);
    n->backward(n->value, n->grad, parent_grads);
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) shape_error("matmul", a.value(), b.value());
  return Tensor::make_op(simstc::matmul(a.value(), b.value()), {a, b},
                         [a, b](const Matrix&, const Matrix& g, std::span<Matrix* const> pg) {
                           if (pg[0]) accumulate(pg[0], matmul_nt(g, b.value()));
                           if (pg[1]) accumulate(pg[1], matmul_tn(a.value(), g));
                         });
}

Tensor matmul_sparse(const SparseMatrix& s, const Tensor& b) {
  if (s.cols() != b.rows()) {
    throw Error("tensor.shape", "matmul_sparse: " + std::to_string(s.rows()) + "x" +
                                    std::to_string(s.cols()) + " times " +
                                    std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  const SparseMatrix* sp = &s;
  return Tensor::make_op(s.multiply(b.value()), {b},
                         [sp](const Matrix&, const Matrix& g, std::span<Matrix* const> pg) {
                           if (pg[0]) accumulate(pg[0], sp->transpose_multiply(g));
                         });
}

Tensor matmul_constant(const Matrix& x, const Tensor& b) {
  if (x.cols != b.rows()) shape_error("matmul_constant", x, b.value());
  const Matrix* xp = &x;
  return Tensor::make_op(simstc::matmul(x, b.value()), {b},
                         [xp](const Matrix&, const Matrix& g, std::span<Matrix* const> pg) {
                           accumulate(pg[0], matmul_tn(*xp, g));
                         });
}

Tensor relu(const Tensor& x) {
  Matrix out(x.rows(), x.cols());
  kernels::active().relu(x.value().data.data(), out.data.data(), out.size());
  return Tensor::make_op(std::move(out), {x},
                         [](const Matrix& y, const Matrix& g, std::span<Matrix* const> pg) {
                           // derivative at 0 is 0
                           for (std::size_t i = 0; i < y.size(); ++i) {
                             if (y.data[i] > 0.0) pg[0]->data[i] += g.data[i];
                           }
                         });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (!a.value().same_shape(b.value())) shape_error("add", a.value(), b.value());
  Matrix out = a.value();
  kernels::active().add(b.value().data.data(), out.data.data(), out.size());
  return Tensor::make_op(std::move(out), {a, b},
                         [](const Matrix&, const Matrix& g, std::span<Matrix* const> pg) {
                           accumulate(pg[0], g);
                           accumulate(pg[1], g);
                         });
}

Tensor add_row_bias(const Tensor& x, const Tensor& bias) {
  if (bias.rows() != 1 || bias.cols() != x.cols()) shape_error("add_row_bias", x.value(), bias.value());
  Matrix out = x.value();
  const auto& k = kernels::active();
  for (std::size_t r = 0; r < out.rows; ++r) k.add(bias.value().data.data(), out.row(r).data(), out.cols);
  return Tensor::make_op(std::move(out), {x, bias},
                         [](const Matrix&, const Matrix& g, std::span<Matrix* const> pg) {
                           accumulate(pg[0], g);
                           if (pg[1]) {
                             for (std::size_t r = 0; r < g.rows; ++r) {
                               kernels::active().add(g.row(r).data(), pg[1]->data.data(), g.cols);
                             }
                           }
                         });
}

Tensor scale(const Tensor& x, double factor) {
  Matrix out(x.rows(), x.cols());
  kernels::active().scale(factor, x.value().data.data(), out.data.data(), out.size());
  return Tensor::make_op(std::move(out), {x},
                         [factor](const Matrix&, const Matrix& g, std::span<Matrix* const> pg) {
                           kernels::active().axpy(factor, g.data.data(), pg[0]->data.data(), g.size());
                         });
}

Tensor row_normalize_l2(const Tensor& x, double epsilon, std::size_t* guarded_rows) {
  if (!(epsilon > 0.0)) throw Error("tensor.config", "row_normalize_l2 needs epsilon > 0");
  const Matrix& in = x.value();
  Matrix out(in.rows, in.cols);
  std::vector<double> norms(in.rows);
  std::size_t guarded = 0;
  for (std::size_t r = 0; r < in.rows; ++r) {
    double sq = 0.0;
    for (double v : in.row(r)) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm < epsilon) ++guarded;
    norms[r] = std::max(norm, epsilon);
    kernels::active().scale(1.0 / norms[r], in.row(r).data(), out.row(r).data(), in.cols);
  }
  if (guarded_rows != nullptr) *guarded_rows = guarded;
  return Tensor::make_op(
      std::move(out), {x},
      [norms = std::move(norms), epsilon](const Matrix& y, const Matrix& g,
                                          std::span<Matrix* const> pg) {
        for (std::size_t r = 0; r < y.rows; ++r) {
          auto dst = pg[0]->row(r);
          const auto yr = y.row(r);
          const auto gr = g.row(r);
          if (norms[r] > epsilon) {
            // (g - y (y . g)) / ||x||
            double yg = 0.0;
            for (std::size_t c = 0; c < y.cols; ++c) yg += yr[c] * gr[c];
            for (std::size_t c = 0; c < y.cols; ++c) dst[c] += (gr[c] - yr[c] * yg) / norms[r];
          } else {
            for (std::size_t c = 0; c < y.cols; ++c) dst[c] += gr[c] / epsilon;
          }
        }
      });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw Error("tensor.shape", "concat_cols of nothing");
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) shape_error("concat_cols", parts[0].value(), p.value());
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(p.value().row(r).begin(), p.value().row(r).end(), out.row(r).begin() + offset);
    }
    offset += p.cols();
  }
  return Tensor::make_op(std::move(out), parts,
                         [offsets](const Matrix&, const Matrix& g, std::span<Matrix* const> pg) {
                           for (std::size_t k = 0; k < pg.size(); ++k) {
                             if (!pg[k]) continue;
                             for (std::size_t r = 0; r < g.rows; ++r) {
                               kernels::active().add(g.row(r).data() + offsets[k],
                                                     pg[k]->row(r).data(), pg[k]->cols);
                             }
                           }
                         });
}

Tensor log_softmax_rows(const Tensor& x) {
  const Matrix& in = x.value();
  Matrix out(in.rows, in.cols);
  for (std::size_t r = 0; r < in.rows; ++r) {
    const auto row = in.row(r);
    if (row.empty()) continue;
    const double mx = *std::max_element(row.begin(), row.end());
    double s = 0.0;
    for (double v : row) s += std::exp(v - mx);
    const double ls = std::log(s);
    for (std::size_t c = 0; c < in.cols; ++c) out(r, c) = (row[c] - mx) - ls;
  }
  return Tensor::make_op(std::move(out), {x},
                         [](const Matrix& y, const Matrix& g, std::span<Matrix* const> pg) {
                           for (std::size_t r = 0; r < y.rows; ++r) {
                             double gs = 0.0;
                             for (double v : g.row(r)) gs += v;
                             auto dst = pg[0]->row(r);
                             for (std::size_t c = 0; c < y.cols; ++c) {
                               dst[c] += g(r, c) - std::exp(y(r, c)) * gs;
                             }
                           }
                         });
}

Tensor dot_products_all_pairs(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) shape_error("dot_products_all_pairs", a.value(), b.value());
  return Tensor::make_op(matmul_nt(a.value(), b.value()), {a, b},
                         [a, b](const Matrix&, const Matrix& g, std::span<Matrix* const> pg) {
                           if (pg[0]) accumulate(pg[0], simstc::matmul(g, b.value()));
                           if (pg[1]) accumulate(pg[1], matmul_tn(g, a.value()));
                         });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.value().data) s += v;
  Matrix out(1, 1, s);
  return Tensor::make_op(std::move(out), {x},
                         [](const Matrix&, const Matrix& g, std::span<Matrix* const> pg) {
                           for (double& v : pg[0]->data) v += g.data[0];
                         });
}

Tensor select_sum(const Tensor& x, std::vector<Position> positions) {
  double s = 0.0;
  for (const auto& p : positions) {
    if (p.row >= x.rows() || p.col >= x.cols()) {
      throw Error("tensor.index", "select_sum position out of range");
    }
    s += x.value()(p.row, p.col);
  }
  return Tensor::make_op(Matrix(1, 1, s), {x},
                         [positions = std::move(positions)](const Matrix&, const Matrix& g,
                                                            std::span<Matrix* const> pg) {
                           for (const auto& p : positions) (*pg[0])(p.row, p.col) += g.data[0];
                         });
}

}  // namespace simstc
