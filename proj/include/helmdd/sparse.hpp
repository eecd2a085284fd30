#pragma once

#include <span>
#include <vector>

#include "helmdd/types.hpp"

namespace helmdd {

struct Triplet {
  int row;
  int col;
  Complex value;
};

/// Compressed sparse row matrix of complex doubles. Column indices are
/// strictly increasing within each row.
class SparseComplexMatrix {
 public:
  SparseComplexMatrix() = default;
  SparseComplexMatrix(int rows, int cols, std::vector<int> row_ptr, std::vector<int> col_idx,
                      std::vector<Complex> values);

  /// Sums duplicate entries.
  static SparseComplexMatrix from_triplets(int rows, int cols, std::vector<Triplet> triplets);
  static SparseComplexMatrix identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t nnz() const { return col_idx_.size(); }

  std::span<const int> row_ptr() const { return row_ptr_; }
  std::span<const int> col_idx() const { return col_idx_; }
  std::span<const Complex> values() const { return values_; }
  std::span<Complex> values() { return values_; }

  /// Position of (r, c) in values(), or -1 when structurally zero.
  long find(int r, int c) const;
  Complex at(int r, int c) const;

  /// y = A x
  void multiply(std::span<const Complex> x, std::span<Complex> y) const;
  ComplexVector operator*(std::span<const Complex> x) const;

  SparseComplexMatrix transpose() const;
  /// Removes explicitly stored zeros.
  void prune_zeros();

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> row_ptr_{0};
  std::vector<int> col_idx_;
  std::vector<Complex> values_;
};

}  // namespace helmdd
