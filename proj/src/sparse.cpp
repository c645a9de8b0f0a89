#include "simstc/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "simstc/error.hpp"
#include "simstc/kernels.hpp"

namespace simstc {

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
  if (rows > std::numeric_limits<std::uint32_t>::max() ||
      cols > std::numeric_limits<std::uint32_t>::max()) {
    throw Error("sparse.shape", "sparse matrix dimension exceeds 32-bit index range");
  }
  build_offsets();
}

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                         std::vector<SparseEntry> entries, Duplicates dup) {
  SparseMatrix m(rows, cols);
  for (const auto& e : entries) {
    if (e.row >= rows || e.col >= cols) {
      throw Error("sparse.index", "entry (" + std::to_string(e.row) + "," +
                                      std::to_string(e.col) + ") outside " +
                                      std::to_string(rows) + "x" + std::to_string(cols));
    }
    if (!std::isfinite(e.value)) {
      throw Error("sparse.non_finite", "non-finite value at (" + std::to_string(e.row) + "," +
                                           std::to_string(e.col) + ")");
    }
  }
  std::stable_sort(entries.begin(), entries.end(), [](const SparseEntry& a, const SparseEntry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<SparseEntry> merged;
  merged.reserve(entries.size());
  for (const auto& e : entries) {
    if (!merged.empty() && merged.back().row == e.row && merged.back().col == e.col) {
      if (dup == Duplicates::kReject) {
        throw Error("sparse.duplicate", "duplicate entry (" + std::to_string(e.row) + "," +
                                            std::to_string(e.col) + ")");
      }
      merged.back().value += e.value;
    } else {
      merged.push_back(e);
    }
  }
  std::erase_if(merged, [](const SparseEntry& e) { return e.value == 0.0; });
  m.entries_ = std::move(merged);
  m.build_offsets();
  return m;
}

SparseMatrix SparseMatrix::from_dense(const Matrix& dense) {
  std::vector<SparseEntry> entries;
  for (std::size_t i = 0; i < dense.rows; ++i) {
    for (std::size_t j = 0; j < dense.cols; ++j) {
      if (dense(i, j) != 0.0) {
        entries.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), dense(i, j)});
      }
    }
  }
  return from_triplets(dense.rows, dense.cols, std::move(entries));
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<SparseEntry> entries(n);
  for (std::size_t i = 0; i < n; ++i) {
    entries[i] = {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i), 1.0};
  }
  return from_triplets(n, n, std::move(entries));
}

void SparseMatrix::build_offsets() {
  row_offsets_.assign(rows_ + 1, 0);
  for (const auto& e : entries_) ++row_offsets_[e.row + 1];
  for (std::size_t r = 0; r < rows_; ++r) row_offsets_[r + 1] += row_offsets_[r];
}

double SparseMatrix::at(std::size_t r, std::size_t c) const {
  const auto span = row(r);
  const auto it = std::lower_bound(span.begin(), span.end(), c,
                                   [](const SparseEntry& e, std::size_t col) { return e.col < col; });
  return (it != span.end() && it->col == c) ? it->value : 0.0;
}

Matrix SparseMatrix::to_dense() const {
  Matrix d(rows_, cols_);
  for (const auto& e : entries_) d(e.row, e.col) = e.value;
  return d;
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<SparseEntry> t;
  t.reserve(entries_.size());
  for (const auto& e : entries_) t.push_back({e.col, e.row, e.value});
  return from_triplets(cols_, rows_, std::move(t));
}

bool SparseMatrix::is_symmetric(double tol) const {
  if (rows_ != cols_) return false;
  for (const auto& e : entries_) {
    if (std::abs(e.value - at(e.col, e.row)) > tol) return false;
  }
  return true;
}

Matrix SparseMatrix::multiply(const Matrix& dense) const {
  if (cols_ != dense.rows) {
    throw Error("tensor.shape", "sparse multiply: " + std::to_string(rows_) + "x" +
                                    std::to_string(cols_) + " times " +
                                    std::to_string(dense.rows) + "x" + std::to_string(dense.cols));
  }
  Matrix out(rows_, dense.cols);
  const auto& k = kernels::active();
  for (const auto& e : entries_) {
    k.axpy(e.value, dense.data.data() + e.col * dense.cols, out.data.data() + e.row * out.cols,
           dense.cols);
  }
  return out;
}

Matrix SparseMatrix::transpose_multiply(const Matrix& dense) const {
  if (rows_ != dense.rows) {
    throw Error("tensor.shape", "sparse transpose multiply: shape mismatch");
  }
  Matrix out(cols_, dense.cols);
  const auto& k = kernels::active();
  for (const auto& e : entries_) {
    k.axpy(e.value, dense.data.data() + e.row * dense.cols, out.data.data() + e.col * out.cols,
           dense.cols);
  }
  return out;
}

void SparseMatrix::write(std::ostream& out) const {
  out << rows_ << ' ' << cols_ << ' ' << entries_.size() << '\n';
  char buf[64];
  for (const auto& e : entries_) {
    std::snprintf(buf, sizeof buf, "%.17g", e.value);
    out << e.row << ' ' << e.col << ' ' << buf << '\n';
  }
}

SparseMatrix SparseMatrix::read(std::istream& in) {
  std::size_t rows = 0, cols = 0, nnz = 0;
  if (!(in >> rows >> cols >> nnz)) throw Error("bundle.format", "bad matrix header");
  std::vector<SparseEntry> entries(nnz);
  for (std::size_t i = 0; i < nnz; ++i) {
    std::string value;
    if (!(in >> entries[i].row >> entries[i].col >> value)) {
      throw Error("bundle.format", "truncated matrix body at entry " + std::to_string(i));
    }
    entries[i].value = std::strtod(value.c_str(), nullptr);
  }
  return from_triplets(rows, cols, std::move(entries));
}

}  // namespace simstc
