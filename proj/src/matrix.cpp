#include "simstc/matrix.hpp"

#include <cmath>
#include <string>

#include "simstc/error.hpp"
#include "simstc/kernels.hpp"

namespace simstc {
namespace {

void require(bool ok, const char* op, const Matrix& a, const Matrix& b) {
  if (!ok) {
    throw Error("tensor.shape", std::string(op) + ": incompatible shapes " +
                                    std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                                    " and " + std::to_string(b.rows) + "x" +
                                    std::to_string(b.cols));
  }
}

}  // namespace

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m;
  m.rows = rows.size();
  m.cols = rows.size() == 0 ? 0 : rows.begin()->size();
  m.data.reserve(m.rows * m.cols);
  for (const auto& r : rows) {
    if (r.size() != m.cols) throw Error("tensor.shape", "from_rows: ragged initializer");
    m.data.insert(m.data.end(), r.begin(), r.end());
  }
  return m;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

// All three products are written as rank-1 row updates so the inner loop is
// an axpy: the vector kernels then reproduce the scalar result exactly.
Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols == b.rows, "matmul", a, b);
  Matrix c(a.rows, b.cols);
  const auto& k = kernels::active();
  for (std::size_t i = 0; i < a.rows; ++i) {
    double* out = c.data.data() + i * c.cols;
    for (std::size_t p = 0; p < a.cols; ++p) {
      const double s = a(i, p);
      if (s != 0.0) k.axpy(s, b.data.data() + p * b.cols, out, b.cols);
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require(a.rows == b.rows, "matmul_tn", a, b);
  Matrix c(a.cols, b.cols);
  const auto& k = kernels::active();
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* src = b.data.data() + i * b.cols;
    for (std::size_t p = 0; p < a.cols; ++p) {
      const double s = a(i, p);
      if (s != 0.0) k.axpy(s, src, c.data.data() + p * c.cols, b.cols);
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require(a.cols == b.cols, "matmul_nt", a, b);
  return matmul(a, transpose(b));
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  }
  return t;
}

}  // namespace simstc
