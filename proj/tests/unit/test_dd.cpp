#include <doctest.h>

#include <random>

#include "helmdd/dd.hpp"
#include "helmdd/parallel.hpp"
#include "support.hpp"

using namespace helmdd;
using namespace helmdd::testing;

namespace {

// Box [0, cells]^dim at h = 1 with a centred source; lambda = 5 cells.
fem::Discretization small_problem(int cells, int dim = 2, int order = 1, bool pml_bc = false) {
  fem::ProblemSpec p;
  p.domain = dim == 2 ? grid::BoxDomain::square(0.0, cells) : grid::BoxDomain::cube(0.0, cells);
  p.frequency = 0.2;
  p.n_lambda = 5.0;
  p.order = order;
  p.source = fem::GaussianPoint{{0.5 * cells, 0.5 * cells, dim == 3 ? 0.5 * cells : 0.0}};
  if (pml_bc) p.global_bc = fem::PmlBoundary::uniform({}, 2.0, dim);
  return fem::discretize(p);
}

dd::DecompositionSpec split(int sx, int sy, int overlap, dd::InterfaceKind kind = dd::InterfaceKind::Pml) {
  dd::DecompositionSpec s;
  s.splits = {sx, sy, 1};
  s.overlap = overlap;
  s.interface.kind = kind;
  return s;
}

}  // namespace

TEST_CASE("split_axis puts remainders first") {
  CHECK(dd::split_axis(10, 3) == std::vector<int>{0, 4, 7, 10});
  CHECK(dd::split_axis(8, 1) == std::vector<int>{0, 8});
  CHECK_THROWS_AS(dd::split_axis(3, 4), InvalidInput);
}

TEST_CASE("overlap growth conventions") {
  dd::DecompositionSpec s;
  s.overlap = 3;
  CHECK(s.growth() == 3);
  s.convention = dd::OverlapConvention::SharedTotal;
  CHECK(s.growth() == 2);
  CHECK(dd::parse_overlap_convention(dd::to_string(s.convention)) == s.convention);
  CHECK(dd::parse_interface_kind("impedance") == dd::InterfaceKind::Impedance);
  CHECK_THROWS_AS(dd::parse_interface_kind("robin"), InvalidInput);
}

TEST_CASE("interface layers at least as thick as the overlap raise a warning only") {
  auto s = split(2, 2, 2);
  s.interface.layers = 5;
  CHECK_FALSE(s.warnings().empty());
  CHECK_NOTHROW(s.validate(2));
  s.interface.layers = 1;
  CHECK(s.warnings().empty());
  s.interface.kind = dd::InterfaceKind::Impedance;
  s.interface.layers = 9;
  CHECK(s.warnings().empty());
}

TEST_CASE("2 x 1 split of a 10 x 10 mesh with overlap 2") {
  const auto d = small_problem(10);
  const auto dec = dd::decompose(d.mesh, d.dofmap, split(2, 1, 2), d.problem);
  REQUIRE(dec.n_sub() == 2);
  CHECK(dec.subdomains[0].cell_box == grid::CellBox{{0, 0, 0}, {5, 10, 1}});
  CHECK(dec.subdomains[0].local_box == grid::CellBox{{0, 0, 0}, {7, 10, 1}});
  CHECK(dec.subdomains[1].local_box == grid::CellBox{{3, 0, 0}, {10, 10, 1}});
  CHECK(dec.subdomains[0].interior_face[grid::kFaceXHigh]);
  CHECK_FALSE(dec.subdomains[0].interior_face[grid::kFaceXLow]);
}

TEST_CASE("decompositions that cannot fit are rejected") {
  const auto d = small_problem(10);
  CHECK_THROWS_AS(dd::decompose(d.mesh, d.dofmap, split(11, 1, 1), d.problem), InvalidInput);
  CHECK_THROWS_AS(dd::decompose(d.mesh, d.dofmap, split(5, 1, 2), d.problem), InvalidInput);
  CHECK_THROWS_AS(dd::check_decomposition({10, 10, 1}, 2, split(4, 1, 3)), InvalidInput);
  CHECK_NOTHROW(dd::check_decomposition({10, 10, 1}, 2, split(4, 1, 1)));
}

TEST_CASE("interface PML strips may not cut hole-adjusted elements") {
  fem::ProblemSpec p;
  p.domain = grid::BoxDomain::square(0.0, 10.0);
  p.domain.hole = grid::Circle{{5.0, 5.0, 0.0}, 1.0};
  p.source = fem::PlaneWaveScattering{};
  p.n_lambda = 10;
  p.order = 1;
  const auto d = fem::discretize(p);
  // The truncation plane of subdomain 0 crosses the circle.
  auto s = split(2, 1, 1);
  CHECK_THROWS_AS(dd::decompose(d.mesh, d.dofmap, s, d.problem), InvalidInput);
  s.interface.kind = dd::InterfaceKind::Impedance;
  CHECK_NOTHROW(dd::decompose(d.mesh, d.dofmap, s, d.problem));
}

TEST_CASE("one subdomain reproduces the global system") {
  for (auto kind : {dd::InterfaceKind::Pml, dd::InterfaceKind::Impedance})
    for (bool pml_bc : {false, true}) {
      const auto d = small_problem(8, 2, 2, pml_bc);
      const auto dec = dd::decompose(d.mesh, d.dofmap, split(1, 1, 2, kind), d.problem);
      const auto& sd = dec.subdomains[0];
      REQUIRE(sd.size() == d.dofmap.n_dofs);
      CHECK((to_dense(sd.A) - to_dense(d.system.A)).cwiseAbs().maxCoeff() < 1e-13);
      for (auto w : sd.pou) CHECK(w == 1);
      std::mt19937_64 rng(1);
      const auto r = random_vector(d.dofmap.n_dofs, rng);
      const auto z = dd::apply_oras(dec, r);
      const auto x = solver::factorize(d.system.A)->solve(r);
      for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(z[i] - x[i]) < 1e-10 * (1.0 + std::abs(x[i])));
    }
}

TEST_CASE("ORAS of zero is zero") {
  const auto d = small_problem(10);
  const auto dec = dd::decompose(d.mesh, d.dofmap, split(2, 2, 1), d.problem);
  const auto z = dd::apply_oras(dec, ComplexVector(d.dofmap.n_dofs));
  for (const auto& v : z) CHECK(v == Complex{});
}

TEST_CASE("partition of unity ownership") {
  const auto d = small_problem(12);
  const auto dec = dd::decompose(d.mesh, d.dofmap, split(3, 3, 2), d.problem, {false, true, false});
  std::mt19937_64 rng(2);
  const auto v = random_vector(d.dofmap.n_dofs, rng);
  CHECK(dd::apply_partition_identity(dec, v) == v);

  // Interior point of subdomain 4 (the centre block [4,8)^2) and a point on
  // the shared edge x = 4 of subdomains 0 and 1.
  auto owners = [&](const Point& x) {
    std::vector<int> own;
    for (const auto& sd : dec.subdomains)
      for (int i = 0; i < sd.size(); ++i)
        if (sd.pou[i] && d.dofmap.dof_coords[sd.dofs[i]] == x) own.push_back(sd.id);
    return own;
  };
  CHECK(owners({6.0, 6.0, 0.0}) == std::vector<int>{4});
  CHECK(owners({4.0, 2.0, 0.0}) == std::vector<int>{0});
  CHECK(owners({4.0, 4.0, 0.0}) == std::vector<int>{0});
}

TEST_CASE("partition identity on random decompositions") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 6; ++trial) {
    const int dim = trial % 2 == 0 ? 2 : 3;
    const int cells = dim == 2 ? 12 : 6;
    std::uniform_int_distribution<int> parts(1, dim == 2 ? 4 : 2);
    dd::DecompositionSpec s;
    s.splits = {parts(rng), parts(rng), dim == 3 ? parts(rng) : 1};
    s.overlap = 1 + trial % 2;
    const auto d = small_problem(cells, dim, 1);
    const auto dec = dd::decompose(d.mesh, d.dofmap, s, d.problem, {false, true, false});
    const auto v = random_vector(d.dofmap.n_dofs, rng);
    CHECK(dd::apply_partition_identity(dec, v) == v);
  }
}

TEST_CASE("ORAS matches the dense sum of restricted local solves") {
  const auto d = small_problem(10, 2, 1);
  REQUIRE(d.dofmap.n_dofs <= 400);
  for (auto kind : {dd::InterfaceKind::Pml, dd::InterfaceKind::Impedance}) {
    const auto dec = dd::decompose(d.mesh, d.dofmap, split(2, 1, 2, kind), d.problem);
    const int n = d.dofmap.n_dofs;
    DenseMatrix M = DenseMatrix::Zero(n, n);
    for (const auto& sd : dec.subdomains) {
      DenseMatrix R = DenseMatrix::Zero(sd.size(), n);
      DenseMatrix D = DenseMatrix::Zero(sd.size(), sd.size());
      for (int i = 0; i < sd.size(); ++i) {
        R(i, sd.dofs[i]) = 1.0;
        D(i, i) = sd.pou[i];
      }
      M += R.transpose() * D * to_dense(sd.A).inverse() * R;
    }
    std::mt19937_64 rng(4);
    const auto r = random_vector(n, rng);
    const DenseVector expected = M * to_eigen(r);
    const DenseVector got = to_eigen(dd::apply_oras(dec, r));
    CHECK((got - expected).norm() / expected.norm() < 1e-10);
  }
}

TEST_CASE("ORAS application does not depend on the thread count") {
  const auto d = small_problem(16, 2, 2, true);
  const auto dec = dd::decompose(d.mesh, d.dofmap, split(4, 2, 2), d.problem);
  std::mt19937_64 rng(5);
  const auto r = random_vector(d.dofmap.n_dofs, rng);
  const int saved = num_threads();
  set_num_threads(1);
  const auto one = dd::apply_oras(dec, r);
  set_num_threads(3);
  const auto three = dd::apply_oras(dec, r);
  set_num_threads(saved);
  CHECK(one == three);
}

TEST_CASE("ORAS-preconditioned GMRES reaches the direct solution") {
  const auto d = small_problem(20, 2, 2, true);
  solver::GmresConfig cfg;
  cfg.rel_tol = 1e-10;
  for (auto kind : {dd::InterfaceKind::Pml, dd::InterfaceKind::Impedance}) {
    const auto res = dd::solve_with_oras(d, split(3, 2, 2, kind), cfg);
    REQUIRE(res.report.converged);
    const auto x = solver::factorize(d.system.A)->solve(d.system.b);
    ComplexVector diff(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) diff[i] = res.solution[i] - x[i];
    CHECK(norm2(diff) / norm2(x) < 1e-8);
  }
}

TEST_CASE("3D decomposition with PML interfaces") {
  const auto d = small_problem(6, 3, 1, true);
  dd::DecompositionSpec s;
  s.splits = {2, 2, 2};
  s.overlap = 2;
  solver::GmresConfig cfg;
  cfg.rel_tol = 1e-8;
  const auto res = dd::solve_with_oras(d, s, cfg);
  CHECK(res.report.converged);
  CHECK(res.report.iterations < 40);
}
