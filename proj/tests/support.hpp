#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "helmdd/fem.hpp"
#include "helmdd/solver.hpp"
#include "helmdd/sparse.hpp"

namespace helmdd::testing {

using DenseMatrix = Eigen::MatrixXcd;
using DenseVector = Eigen::VectorXcd;

inline DenseMatrix to_dense(const SparseComplexMatrix& A) {
  DenseMatrix M = DenseMatrix::Zero(A.rows(), A.cols());
  for (int r = 0; r < A.rows(); ++r)
    for (int p = A.row_ptr()[r]; p < A.row_ptr()[r + 1]; ++p) M(r, A.col_idx()[p]) = A.values()[p];
  return M;
}

inline DenseVector to_eigen(std::span<const Complex> v) {
  DenseVector e(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) e(static_cast<Eigen::Index>(i)) = v[i];
  return e;
}

inline ComplexVector random_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  ComplexVector v(n);
  for (auto& x : v) x = {g(rng), g(rng)};
  return v;
}

/// Sparse complex matrix with a dominant diagonal and `per_row` random
/// off-diagonal entries per row.
inline SparseComplexMatrix random_sparse(int n, int per_row, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::uniform_int_distribution<int> col(0, n - 1);
  std::vector<Triplet> t;
  for (int r = 0; r < n; ++r) {
    t.push_back({r, r, Complex{4.0 + g(rng), g(rng)}});
    for (int k = 0; k < per_row; ++k) t.push_back({r, col(rng), Complex{g(rng), g(rng)}});
  }
  return SparseComplexMatrix::from_triplets(n, n, std::move(t));
}

inline double norm2(std::span<const Complex> v) {
  double s = 0.0;
  for (const auto& x : v) s += std::norm(x);
  return std::sqrt(s);
}

/// Dirichlet problem -(Delta + k^2) u = g on the unit box with the exact
/// solution u = exp(i (a.x)), |a| != k. Returns the relative L2 error.
inline double manufactured_error(int dim, int order, int cells, double k = 2.0) {
  const grid::BoxDomain box = dim == 2 ? grid::BoxDomain::square(0.0, 1.0) : grid::BoxDomain::cube(0.0, 1.0);
  const Point a{3.0, -2.0, dim == 3 ? 1.5 : 0.0};
  const double a2 = a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
  auto exact = [a](const Point& x) { return std::exp(kI * (a[0] * x[0] + a[1] * x[1] + a[2] * x[2])); };
  const auto mesh = grid::build_mesh(box, 1.0 / cells);
  const auto dofmap = fe::build_dofmap(mesh, order);
  const auto patch = fem::Patch::whole(mesh, dofmap);
  fem::OperatorTerms terms;
  terms.wavenumber = [k](const Point&) { return k; };
  auto A = fem::assemble_operator(mesh, dofmap, patch, terms);
  auto b = fem::assemble_load(mesh, dofmap, patch, [&](const Point& x) { return (a2 - k * k) * exact(x); }, {});
  const auto fixed = fem::facet_dofs(dofmap, mesh.boundary_facets);
  ComplexVector values;
  for (int d : fixed) values.push_back(exact(dofmap.dof_coords[d]));
  fem::apply_dirichlet(A, b, fixed, values);
  const auto u = solver::factorize(A)->solve(b);
  return fem::l2_relative_error(u, exact, mesh, dofmap, false, box);
}

}  // namespace helmdd::testing
