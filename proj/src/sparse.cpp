#include "helmdd/sparse.hpp"

#include <algorithm>

namespace helmdd {

SparseComplexMatrix::SparseComplexMatrix(int rows, int cols, std::vector<int> row_ptr,
                                         std::vector<int> col_idx, std::vector<Complex> values)
    : rows_(rows),
      cols_(cols),
      row_ptr_(std::move(row_ptr)),
      col_idx_(std::move(col_idx)),
      values_(std::move(values)) {
  if (rows < 0 || cols < 0 || row_ptr_.size() != static_cast<std::size_t>(rows) + 1 ||
      col_idx_.size() != values_.size() ||
      static_cast<std::size_t>(row_ptr_.back()) != col_idx_.size())
    throw InvalidInput("SparseComplexMatrix: inconsistent CSR arrays");
  for (int r = 0; r < rows_; ++r)
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      if (col_idx_[k] < 0 || col_idx_[k] >= cols_)
        throw InvalidInput("SparseComplexMatrix: column index out of range");
      if (k > row_ptr_[r] && col_idx_[k] <= col_idx_[k - 1])
        throw InvalidInput("SparseComplexMatrix: columns must be strictly increasing");
    }
}

SparseComplexMatrix SparseComplexMatrix::from_triplets(int rows, int cols,
                                                       std::vector<Triplet> triplets) {
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<int> ptr(rows + 1, 0);
  std::vector<int> cols_out;
  std::vector<Complex> vals;
  for (std::size_t i = 0; i < triplets.size();) {
    const auto& t = triplets[i];
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
      throw InvalidInput("from_triplets: index out of range");
    Complex sum = 0.0;
    std::size_t j = i;
    while (j < triplets.size() && triplets[j].row == t.row && triplets[j].col == t.col)
      sum += triplets[j++].value;
    cols_out.push_back(t.col);
    vals.push_back(sum);
    ++ptr[t.row + 1];
    i = j;
  }
  for (int r = 0; r < rows; ++r) ptr[r + 1] += ptr[r];
  return {rows, cols, std::move(ptr), std::move(cols_out), std::move(vals)};
}

SparseComplexMatrix SparseComplexMatrix::identity(int n) {
  std::vector<int> ptr(n + 1), idx(n);
  for (int i = 0; i <= n; ++i) ptr[i] = i;
  for (int i = 0; i < n; ++i) idx[i] = i;
  return {n, n, std::move(ptr), std::move(idx), std::vector<Complex>(n, 1.0)};
}

long SparseComplexMatrix::find(int r, int c) const {
  const auto begin = col_idx_.begin() + row_ptr_[r];
  const auto end = col_idx_.begin() + row_ptr_[r + 1];
  const auto it = std::lower_bound(begin, end, c);
  if (it == end || *it != c) return -1;
  return it - col_idx_.begin();
}

Complex SparseComplexMatrix::at(int r, int c) const {
  const long k = find(r, c);
  return k < 0 ? Complex{0.0, 0.0} : values_[k];
}

void SparseComplexMatrix::multiply(std::span<const Complex> x, std::span<Complex> y) const {
  if (x.size() != static_cast<std::size_t>(cols_) || y.size() != static_cast<std::size_t>(rows_))
    throw InvalidInput("SparseComplexMatrix::multiply: dimension mismatch");
  for (int r = 0; r < rows_; ++r) {
    Complex s = 0.0;
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s += values_[k] * x[col_idx_[k]];
    y[r] = s;
  }
}

ComplexVector SparseComplexMatrix::operator*(std::span<const Complex> x) const {
  ComplexVector y(rows_);
  multiply(x, y);
  return y;
}

SparseComplexMatrix SparseComplexMatrix::transpose() const {
  std::vector<int> ptr(cols_ + 1, 0);
  for (int c : col_idx_) ++ptr[c + 1];
  for (int c = 0; c < cols_; ++c) ptr[c + 1] += ptr[c];
  std::vector<int> idx(nnz());
  std::vector<Complex> val(nnz());
  std::vector<int> fill(ptr.begin(), ptr.end() - 1);
  for (int r = 0; r < rows_; ++r)
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      const int pos = fill[col_idx_[k]]++;
      idx[pos] = r;
      val[pos] = values_[k];
    }
  return {cols_, rows_, std::move(ptr), std::move(idx), std::move(val)};
}

void SparseComplexMatrix::prune_zeros() {
  int out = 0;
  int start = 0;
  for (int r = 0; r < rows_; ++r) {
    const int end = row_ptr_[r + 1];
    for (int k = start; k < end; ++k) {
      if (values_[k] == Complex{0.0, 0.0}) continue;
      col_idx_[out] = col_idx_[k];
      values_[out] = values_[k];
      ++out;
    }
    start = end;
    row_ptr_[r + 1] = out;
  }
  col_idx_.resize(out);
  values_.resize(out);
  col_idx_.shrink_to_fit();
  values_.shrink_to_fit();
}

}  // namespace helmdd
