#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace simstc {

// Row-major dense matrix of doubles. Zero-sized dimensions are valid (an
// entity view with no entities has a 0 x d feature matrix).
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  std::size_t size() const { return data.size(); }
  bool same_shape(const Matrix& other) const { return rows == other.rows && cols == other.cols; }
  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

// a * b
Matrix matmul(const Matrix& a, const Matrix& b);
// transpose(a) * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// a * transpose(b)
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

}  // namespace simstc
