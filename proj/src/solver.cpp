#include "helmdd/solver.hpp"

#include <umfpack.h>

#include <chrono>
#include <cmath>
#include <new>
#include <string>

namespace helmdd::solver {

LinearOperator as_operator(const SparseComplexMatrix& A) {
  return [&A](std::span<const Complex> x, std::span<Complex> y) { A.multiply(x, y); };
}

LinearOperator identity_operator() {
  return [](std::span<const Complex> x, std::span<Complex> y) {
    std::copy(x.begin(), x.end(), y.begin());
  };
}

namespace {

double* as_doubles(std::vector<Complex>& v) { return reinterpret_cast<double*>(v.data()); }

void check_status(int status, const char* where) {
  if (status == UMFPACK_OK) return;
  if (status == UMFPACK_ERROR_out_of_memory) throw std::bad_alloc();
  throw std::runtime_error(std::string("UMFPACK ") + where + " failed with status " +
                           std::to_string(status));
}

}  // namespace

SparseLU::SparseLU(const SparseComplexMatrix& A) {
  if (A.rows() != A.cols()) throw InvalidInput("SparseLU: matrix must be square");
  n_ = A.rows();
  ptr_.assign(A.row_ptr().begin(), A.row_ptr().end());
  idx_.assign(A.col_idx().begin(), A.col_idx().end());
  val_.assign(A.values().begin(), A.values().end());

  double control[UMFPACK_CONTROL];
  double info[UMFPACK_INFO];
  umfpack_zi_defaults(control);
  control[UMFPACK_ORDERING] = UMFPACK_ORDERING_AMD;
  control[UMFPACK_IRSTEP] = 0;

  void* symbolic = nullptr;
  int status = umfpack_zi_symbolic(n_, n_, ptr_.data(), idx_.data(), as_doubles(val_), nullptr,
                                   &symbolic, control, info);
  check_status(status, "symbolic");
  status = umfpack_zi_numeric(ptr_.data(), idx_.data(), as_doubles(val_), nullptr, symbolic,
                              &numeric_, control, info);
  umfpack_zi_free_symbolic(&symbolic);
  if (status == UMFPACK_WARNING_singular_matrix) {
    // Locate the first zero pivot in U and map it back through the row permutation.
    int lnz = 0, unz = 0, nrow = 0, ncol = 0, nz_udiag = 0;
    umfpack_zi_get_lunz(&lnz, &unz, &nrow, &ncol, &nz_udiag, numeric_);
    std::vector<double> udiag(2 * static_cast<std::size_t>(n_));
    std::vector<int> P(n_), Q(n_);
    umfpack_zi_get_numeric(nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr,
                           nullptr, P.data(), Q.data(), udiag.data(), nullptr, nullptr, nullptr,
                           numeric_);
    int pivot = -1;
    for (int k = 0; k < n_; ++k)
      if (udiag[2 * k] == 0.0 && udiag[2 * k + 1] == 0.0) {
        pivot = Q[k];  // column of A^T = row of A
        break;
      }
    release();
    throw SingularMatrixError("SparseLU: matrix is singular (zero pivot at row " +
                                  std::to_string(pivot) + ")",
                              pivot);
  }
  if (status != UMFPACK_OK) release();
  check_status(status, "numeric");
  factor_nnz_ = static_cast<long>(info[UMFPACK_LNZ] + info[UMFPACK_UNZ]);
}

SparseLU::~SparseLU() { release(); }

SparseLU::SparseLU(SparseLU&& other) noexcept
    : n_(other.n_),
      factor_nnz_(other.factor_nnz_),
      ptr_(std::move(other.ptr_)),
      idx_(std::move(other.idx_)),
      val_(std::move(other.val_)),
      numeric_(other.numeric_) {
  other.numeric_ = nullptr;
}

SparseLU& SparseLU::operator=(SparseLU&& other) noexcept {
  if (this != &other) {
    release();
    n_ = other.n_;
    factor_nnz_ = other.factor_nnz_;
    ptr_ = std::move(other.ptr_);
    idx_ = std::move(other.idx_);
    val_ = std::move(other.val_);
    numeric_ = other.numeric_;
    other.numeric_ = nullptr;
  }
  return *this;
}

void SparseLU::release() noexcept {
  if (numeric_) umfpack_zi_free_numeric(&numeric_);
  numeric_ = nullptr;
}

void SparseLU::solve(std::span<const Complex> rhs, std::span<Complex> x) const {
  if (rhs.size() != static_cast<std::size_t>(n_) || x.size() != static_cast<std::size_t>(n_))
    throw InvalidInput("SparseLU::solve: dimension mismatch");
  double control[UMFPACK_CONTROL];
  double info[UMFPACK_INFO];
  umfpack_zi_defaults(control);
  control[UMFPACK_IRSTEP] = 0;
  // The stored arrays are A in CSR, i.e. A^T in CSC: solve (A^T)^T x = rhs.
  const int status = umfpack_zi_solve(
      UMFPACK_Aat, ptr_.data(), idx_.data(), reinterpret_cast<const double*>(val_.data()), nullptr,
      reinterpret_cast<double*>(x.data()), nullptr, reinterpret_cast<const double*>(rhs.data()),
      nullptr, numeric_, control, info);
  if (status != UMFPACK_OK && status != UMFPACK_WARNING_singular_matrix)
    check_status(status, "solve");
}

ComplexVector SparseLU::solve(std::span<const Complex> rhs) const {
  ComplexVector x(n_);
  solve(rhs, x);
  return x;
}

std::unique_ptr<SparseLU> factorize(const SparseComplexMatrix& A) {
  return std::make_unique<SparseLU>(A);
}

void GmresConfig::validate() const {
  if (!(rel_tol > 0.0)) throw InvalidInput("GmresConfig: rel_tol must be positive");
  if (max_iters < 1) throw InvalidInput("GmresConfig: max_iters must be >= 1");
  if (restart < 0) throw InvalidInput("GmresConfig: restart must be >= 0");
}

namespace {

Complex dot(std::span<const Complex> a, std::span<const Complex> b) {
  Complex s{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

double norm2(std::span<const Complex> a) {
  double s = 0.0;
  for (const auto& v : a) s += std::norm(v);
  return std::sqrt(s);
}

}  // namespace

GmresResult gmres_right(const LinearOperator& A, const LinearOperator& M_inv,
                        std::span<const Complex> b, const GmresConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = b.size();
  const double bnorm = norm2(b);
  if (!(bnorm > 0.0)) throw InvalidInput("gmres_right: right-hand side must be nonzero");

  GmresResult result;
  SolveReport& rep = result.report;
  ComplexVector& u = result.solution;
  u.assign(n, Complex{0.0, 0.0});
  rep.residual_history.push_back(1.0);

  const int m_max = cfg.restart > 0 ? std::min(cfg.restart, cfg.max_iters) : cfg.max_iters;
  ComplexVector r(b.begin(), b.end());
  ComplexVector w(n), z(n), tmp(n);
  double beta = bnorm;
  int total = 0;
  bool done = false;

  while (!done) {
    std::vector<ComplexVector> V;
    V.reserve(m_max + 1);
    V.emplace_back(n);
    for (std::size_t i = 0; i < n; ++i) V[0][i] = r[i] / beta;
    // Hessenberg stored by column; column j has j+2 entries.
    std::vector<std::vector<Complex>> H;
    std::vector<double> cs;
    std::vector<Complex> sn;
    std::vector<Complex> g{Complex{beta, 0.0}};
    int j = 0;
    for (; j < m_max && total < cfg.max_iters; ++j) {
      M_inv(V[j], z);
      A(z, w);
      std::vector<Complex> h(j + 2, Complex{0.0, 0.0});
      const int passes = cfg.reorthogonalize ? 2 : 1;
      for (int pass = 0; pass < passes; ++pass)
        for (int i = 0; i <= j; ++i) {
          const Complex hij = dot(V[i], w);
          h[i] += hij;
          for (std::size_t k = 0; k < n; ++k) w[k] -= hij * V[i][k];
        }
      const double hnext = norm2(w);
      h[j + 1] = hnext;
      for (int i = 0; i < j; ++i) {
        const Complex a = h[i], c = h[i + 1];
        h[i] = cs[i] * a + sn[i] * c;
        h[i + 1] = -std::conj(sn[i]) * a + cs[i] * c;
      }
      const Complex a = h[j];
      const double bb = hnext;
      const double t = std::hypot(std::abs(a), bb);
      double c;
      Complex s;
      if (bb == 0.0) {
        c = 1.0;
        s = 0.0;
      } else if (std::abs(a) == 0.0) {
        c = 0.0;
        s = 1.0;
      } else {
        c = std::abs(a) / t;
        s = (a / std::abs(a)) * bb / t;
      }
      cs.push_back(c);
      sn.push_back(s);
      h[j] = c * a + s * bb;
      h[j + 1] = 0.0;
      g.push_back(-std::conj(s) * g[j]);
      g[j] = c * g[j];
      H.push_back(std::move(h));
      ++total;
      const double res = std::abs(g[j + 1]) / bnorm;
      rep.residual_history.push_back(res);
      const bool breakdown = hnext <= 1e-14 * bnorm;
      if (res <= cfg.rel_tol || breakdown) {
        done = true;
        ++j;
        break;
      }
      if (total >= cfg.max_iters) {
        ++j;
        break;
      }
      V.emplace_back(n);
      for (std::size_t k = 0; k < n; ++k) V[j + 1][k] = w[k] / hnext;
    }
    // Back substitution for y, then u += M^{-1} (V y).
    const int m = j;
    std::vector<Complex> y(m);
    for (int i = m - 1; i >= 0; --i) {
      Complex s = g[i];
      for (int k = i + 1; k < m; ++k) s -= H[k][i] * y[k];
      y[i] = s / H[i][i];
    }
    std::fill(tmp.begin(), tmp.end(), Complex{0.0, 0.0});
    for (int i = 0; i < m; ++i)
      for (std::size_t k = 0; k < n; ++k) tmp[k] += y[i] * V[i][k];
    M_inv(tmp, z);
    for (std::size_t k = 0; k < n; ++k) u[k] += z[k];

    rep.final_relative_residual = rep.residual_history.back();
    if (done) {
      rep.converged = true;
      break;
    }
    if (total >= cfg.max_iters) break;
    // Restart from the true residual.
    A(u, w);
    for (std::size_t k = 0; k < n; ++k) r[k] = b[k] - w[k];
    beta = norm2(r);
    if (beta / bnorm <= cfg.rel_tol) {
      rep.converged = true;
      break;
    }
  }
  rep.iterations = total;
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace helmdd::solver
