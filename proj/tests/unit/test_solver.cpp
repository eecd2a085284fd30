#include <doctest.h>

#include <random>
#include <thread>

#include "helmdd/fem.hpp"
#include "helmdd/solver.hpp"
#include "support.hpp"

using namespace helmdd;
using namespace helmdd::testing;

TEST_CASE("LU: identity and a diagonal complex system") {
  const auto I = SparseComplexMatrix::identity(5);
  const ComplexVector y{1.0, Complex{0.0, 2.0}, -3.0, 4.0, Complex{5.0, -1.0}};
  CHECK(solver::factorize(I)->solve(y) == y);

  const auto D = SparseComplexMatrix::from_triplets(2, 2, {{0, 0, 2.0}, {1, 1, Complex{0.0, 1.0}}});
  const auto x = solver::factorize(D)->solve(ComplexVector{2.0, Complex{0.0, 1.0}});
  CHECK(std::abs(x[0] - 1.0) < 1e-15);
  CHECK(std::abs(x[1] - 1.0) < 1e-15);
}

TEST_CASE("LU: random sparse systems against a dense solve") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const auto A = random_sparse(50, 4, rng);
    const auto y = random_vector(50, rng);
    const auto lu = solver::factorize(A);
    const auto x = lu->solve(y);
    const auto r = A * x;
    ComplexVector diff(50);
    for (int i = 0; i < 50; ++i) diff[i] = r[i] - y[i];
    CHECK(norm2(diff) / norm2(y) < 1e-10);
    const DenseVector xd = to_dense(A).partialPivLu().solve(to_eigen(y));
    CHECK((to_eigen(x) - xd).norm() / xd.norm() < 1e-10);
    CHECK(lu->factor_nonzeros() >= static_cast<long>(A.nnz()) / 2);
  }
}

TEST_CASE("LU: singular matrices are reported") {
  const auto A = SparseComplexMatrix::from_triplets(3, 3, {{0, 0, 1.0}, {1, 1, 1.0}, {2, 0, 1.0}});
  CHECK_THROWS_AS(solver::factorize(A), solver::SingularMatrixError);
  CHECK_THROWS_AS(solver::factorize(SparseComplexMatrix::from_triplets(2, 3, {})), InvalidInput);
}

TEST_CASE("LU: solves may run concurrently") {
  std::mt19937_64 rng(5);
  const auto A = random_sparse(200, 5, rng);
  const auto lu = solver::factorize(A);
  std::vector<ComplexVector> rhs, out(8);
  for (int i = 0; i < 8; ++i) rhs.push_back(random_vector(200, rng));
  {
    std::vector<std::jthread> pool;
    for (int i = 0; i < 8; ++i) pool.emplace_back([&, i] { out[i] = lu->solve(rhs[i]); });
  }
  for (int i = 0; i < 8; ++i) CHECK(out[i] == lu->solve(rhs[i]));
}

TEST_CASE("GMRES: identity converges in one iteration") {
  std::mt19937_64 rng(1);
  const auto b = random_vector(30, rng);
  const auto res = solver::gmres_right(solver::identity_operator(), solver::identity_operator(), b, {});
  CHECK(res.report.converged);
  CHECK(res.report.iterations == 1);
  for (int i = 0; i < 30; ++i) CHECK(std::abs(res.solution[i] - b[i]) < 1e-14);
}

TEST_CASE("GMRES: exact preconditioner") {
  std::mt19937_64 rng(2);
  const auto A = random_sparse(20, 19, rng);
  const auto lu = solver::factorize(A);
  const solver::LinearOperator M = [&](std::span<const Complex> x, std::span<Complex> y) { lu->solve(x, y); };
  solver::GmresConfig cfg;
  cfg.rel_tol = 1e-12;
  const auto b = random_vector(20, rng);
  const auto res = solver::gmres_right(solver::as_operator(A), M, b, cfg);
  CHECK(res.report.converged);
  CHECK(res.report.iterations <= 2);
}

TEST_CASE("GMRES: unpreconditioned Helmholtz matches a dense solve") {
  fem::ProblemSpec p;
  p.domain = grid::BoxDomain::square(0.0, 1.0);
  p.source = fem::GaussianPoint{{0.5, 0.5, 0.0}};
  p.frequency = 0.5;
  p.n_lambda = 20;  // 10 x 10 cells
  p.order = 1;
  const auto d = fem::discretize(p);
  REQUIRE(d.mesh.cells[0] == 10);
  solver::GmresConfig cfg;
  cfg.rel_tol = 1e-10;
  const auto res = solver::gmres_right(solver::as_operator(d.system.A), solver::identity_operator(), d.system.b, cfg);
  REQUIRE(res.report.converged);
  const DenseVector x = to_dense(d.system.A).partialPivLu().solve(to_eigen(d.system.b));
  CHECK((to_eigen(res.solution) - x).norm() / x.norm() < 1e-8);
}

TEST_CASE("GMRES: residual history is non-increasing and matches the true residual") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    const auto A = random_sparse(60, 6, rng);
    const auto b = random_vector(60, rng);
    solver::GmresConfig cfg;
    cfg.rel_tol = 1e-10;
    const auto res = solver::gmres_right(solver::as_operator(A), solver::identity_operator(), b, cfg);
    const auto& h = res.report.residual_history;
    REQUIRE(!h.empty());
    CHECK(h.front() == doctest::Approx(1.0));
    for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i] <= h[i - 1] * (1.0 + 1e-12));
    const auto r = A * res.solution;
    ComplexVector diff(60);
    for (int i = 0; i < 60; ++i) diff[i] = b[i] - r[i];
    CHECK(norm2(diff) / norm2(b) == doctest::Approx(res.report.final_relative_residual).epsilon(1e-3).scale(1e-12));
  }
}

TEST_CASE("GMRES: restarts and the iteration cap") {
  std::mt19937_64 rng(4);
  const auto A = random_sparse(80, 3, rng);
  const auto b = random_vector(80, rng);
  solver::GmresConfig cfg;
  cfg.rel_tol = 1e-8;
  cfg.restart = 15;
  cfg.reorthogonalize = true;
  const auto res = solver::gmres_right(solver::as_operator(A), solver::identity_operator(), b, cfg);
  CHECK(res.report.converged);
  cfg.restart = 0;
  cfg.max_iters = 3;
  cfg.rel_tol = 1e-14;
  const auto capped = solver::gmres_right(solver::as_operator(A), solver::identity_operator(), b, cfg);
  CHECK_FALSE(capped.report.converged);
  CHECK(capped.report.iterations == 3);
}

TEST_CASE("GMRES: invalid input") {
  const ComplexVector zero(4);
  CHECK_THROWS_AS(solver::gmres_right(solver::identity_operator(), solver::identity_operator(), zero, {}),
                  InvalidInput);
  solver::GmresConfig bad;
  bad.rel_tol = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = {};
  bad.max_iters = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
}
