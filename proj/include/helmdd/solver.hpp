#pragma once

#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "helmdd/sparse.hpp"

namespace helmdd::solver {

/// y = Op(x); x and y never alias.
using LinearOperator = std::function<void(std::span<const Complex>, std::span<Complex>)>;

LinearOperator as_operator(const SparseComplexMatrix& A);
LinearOperator identity_operator();

class SingularMatrixError : public std::runtime_error {
 public:
  SingularMatrixError(const std::string& what, int pivot)
      : std::runtime_error(what), pivot_(pivot) {}
  /// Row of the factored matrix whose pivot vanished, or -1 if unknown.
  int pivot() const { return pivot_; }

 private:
  int pivot_;
};

/// Sparse LU with partial pivoting and an AMD fill-reducing column ordering
/// (UMFPACK). Solves are const and may run concurrently.
class SparseLU {
 public:
  explicit SparseLU(const SparseComplexMatrix& A);
  ~SparseLU();
  SparseLU(SparseLU&& other) noexcept;
  SparseLU& operator=(SparseLU&& other) noexcept;
  SparseLU(const SparseLU&) = delete;
  SparseLU& operator=(const SparseLU&) = delete;

  int size() const { return n_; }
  /// Stored nonzeros in L and U.
  long factor_nonzeros() const { return factor_nnz_; }

  void solve(std::span<const Complex> rhs, std::span<Complex> x) const;
  ComplexVector solve(std::span<const Complex> rhs) const;

 private:
  void release() noexcept;

  int n_ = 0;
  long factor_nnz_ = 0;
  // CSR of A read as CSC of A^T; UMFPACK keeps pointers into these arrays.
  std::vector<int> ptr_;
  std::vector<int> idx_;
  std::vector<Complex> val_;
  void* numeric_ = nullptr;
};

std::unique_ptr<SparseLU> factorize(const SparseComplexMatrix& A);

struct GmresConfig {
  double rel_tol = 1e-6;
  int max_iters = 2000;
  int restart = 0;  // 0: full GMRES
  bool reorthogonalize = false;

  void validate() const;
};

struct SolveReport {
  int iterations = 0;
  bool converged = false;
  std::vector<double> residual_history;  // ||r_k|| / ||b||, starts at 1
  double wall_time = 0.0;                // seconds
  double final_relative_residual = 1.0;
};

struct GmresResult {
  ComplexVector solution;
  SolveReport report;
};

/// Right-preconditioned GMRES: minimises ||b - A M^{-1} y|| over the Krylov
/// space of A M^{-1} and returns u = M^{-1} y. Zero initial guess, modified
/// Gram-Schmidt Arnoldi, Givens rotations.
GmresResult gmres_right(const LinearOperator& A, const LinearOperator& M_inv,
                        std::span<const Complex> b, const GmresConfig& cfg);

}  // namespace helmdd::solver
