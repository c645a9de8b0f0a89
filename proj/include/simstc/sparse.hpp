#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "simstc/matrix.hpp"

namespace simstc {

struct SparseEntry {
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  double value = 0.0;

  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

// Immutable coordinate-list matrix, row-major sorted with unique (row, col)
// and no explicit zeros. Row offsets give a compressed-row view of the same
// entries.
class SparseMatrix {
 public:
  enum class Duplicates { kSum, kReject };

  SparseMatrix() = default;
  SparseMatrix(std::size_t rows, std::size_t cols);

  // Validates indices and finiteness, sorts, merges or rejects duplicates,
  // and drops entries that are exactly zero.
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                    std::vector<SparseEntry> entries,
                                    Duplicates dup = Duplicates::kReject);
  static SparseMatrix from_dense(const Matrix& dense);
  static SparseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return entries_.size(); }
  std::span<const SparseEntry> entries() const { return entries_; }
  std::span<const SparseEntry> row(std::size_t r) const {
    return {entries_.data() + row_offsets_[r], row_offsets_[r + 1] - row_offsets_[r]};
  }
  const std::vector<std::size_t>& row_offsets() const { return row_offsets_; }

  // 0.0 when absent
  double at(std::size_t r, std::size_t c) const;

  Matrix to_dense() const;
  SparseMatrix transpose() const;
  bool is_symmetric(double tol) const;

  // this * dense
  Matrix multiply(const Matrix& dense) const;
  // transpose(this) * dense
  Matrix transpose_multiply(const Matrix& dense) const;

  // "rows cols nnz" header then "row col value" lines, values printed with
  // 17 significant digits so a read-back is bit-exact.
  void write(std::ostream& out) const;
  static SparseMatrix read(std::istream& in);

  friend bool operator==(const SparseMatrix& a, const SparseMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.entries_ == b.entries_;
  }

 private:
  void build_offsets();

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<SparseEntry> entries_;
  std::vector<std::size_t> row_offsets_{0};
};

}  // namespace simstc
