// Acceptance checks. Each criterion prints its measurements and one
// PASS/FAIL line; the exit code is nonzero when any selected criterion fails.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include "helmdd/analytic.hpp"
#include "helmdd/bench.hpp"
#include "helmdd/bessel.hpp"
#include "helmdd/dd.hpp"
#include "helmdd/parallel.hpp"
#include "support.hpp"

using namespace helmdd;
using namespace helmdd::testing;
using nlohmann::json;

namespace {

struct Check {
  bool pass = true;
  void require(bool ok, const std::string& what) {
    std::cout << "  " << (ok ? "ok    " : "FAILED") << " " << what << "\n" << std::flush;
    pass = pass && ok;
  }
};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

bench::Setting setting(const json& j) { return bench::parse_setting(j); }

bench::ResultRow run(const bench::Setting& s, const std::string& label) {
  const auto row = bench::run_point(s, 0);
  std::cout << "  " << label << ": dofs=" << row.dofs << " status=" << bench::to_string(row.status)
            << " iterations=" << row.iterations;
  if (row.l2_error) std::cout << " l2_error=" << fmt("%.6e", *row.l2_error);
  if (!row.note.empty()) std::cout << " (" << row.note << ")";
  std::cout << " " << fmt("%.1f", row.total_time) << "s\n" << std::flush;
  return row;
}

// 1. Boolean partition of unity on random decompositions.
bool partition_identity() {
  Check c;
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<int> pick_overlap(1, 8), pick_order(1, 3), pick_extra(0, 3);
  for (int trial = 0; trial < 20; ++trial) {
    const int dim = trial % 2 == 0 ? 2 : 3;
    const int overlap = pick_overlap(rng);
    const int max_cells = dim == 2 ? 120 : 36;
    const int max_split = std::max(1, max_cells / (overlap + 1));
    std::uniform_int_distribution<int> pick_split(1, std::min(dim == 2 ? 10 : 5, max_split));
    grid::Index3 splits{1, 1, 1};
    do {
      for (int a = 0; a < dim; ++a) splits[a] = pick_split(rng);
    } while (splits[0] * splits[1] * splits[2] > 100);
    grid::Index3 cells{1, 1, 1};
    for (int a = 0; a < dim; ++a) cells[a] = splits[a] * (overlap + 1) + pick_extra(rng);
    grid::BoxDomain box;
    box.dim = dim;
    for (int a = 0; a < dim; ++a) box.upper[a] = cells[a];
    const int order = dim == 2 ? pick_order(rng) : 1 + pick_order(rng) % 2;
    const auto mesh = grid::build_mesh(box, 1.0);
    const auto dofmap = fe::build_dofmap(mesh, order);
    dd::DecompositionSpec spec;
    spec.splits = splits;
    spec.overlap = overlap;
    const auto dec = dd::decompose(mesh, dofmap, spec, fem::ProblemSpec{}, {false, false, false});
    const auto v = random_vector(dofmap.n_dofs, rng);
    const auto w = dd::apply_partition_identity(dec, v);
    double worst = 0.0;
    for (int i = 0; i < dofmap.n_dofs; ++i) worst = std::max(worst, std::abs(w[i] - v[i]));
    bool boolean = true;
    for (const auto& sd : dec.subdomains)
      for (auto x : sd.pou) boolean = boolean && (x == 0 || x == 1);
    std::ostringstream what;
    what << dim << "D P" << order << " cells " << cells[0] << "x" << cells[1];
    if (dim == 3) what << "x" << cells[2];
    what << ", " << dec.n_sub() << " subdomains, overlap " << overlap << ": max|sum R^T D R v - v| = " << worst;
    c.require(worst == 0.0 && boolean, what.str());
  }
  return c.pass;
}

// 2. One subdomain: ORAS is the exact inverse.
bool single_subdomain() {
  Check c;
  for (bool pml_bc : {false, true})
    for (auto kind : {dd::InterfaceKind::Pml, dd::InterfaceKind::Impedance}) {
      fem::ProblemSpec p;
      p.frequency = 0.1;
      p.n_lambda = 10.0;  // h = 1
      p.order = 2;
      p.domain = grid::BoxDomain::square(0.0, pml_bc ? 16.0 : 20.0);
      p.source = fem::GaussianPoint{{p.domain.upper[0] / 2, p.domain.upper[0] / 2, 0.0}};
      if (pml_bc) p.global_bc = fem::PmlBoundary::uniform({}, 2.0, 2);
      const auto d = fem::discretize(p);
      dd::DecompositionSpec spec;
      spec.interface.kind = kind;
      solver::GmresConfig cfg;
      cfg.rel_tol = 1e-10;
      const auto res = dd::solve_with_oras(d, spec, cfg);
      c.require(d.mesh.cells[0] == 20 && d.mesh.cells[1] == 20 && res.report.converged &&
                    res.report.iterations <= 2,
                std::string(pml_bc ? "PML" : "impedance") + " BC, " + dd::to_string(kind) +
                    " IC, 20x20 cells: " + std::to_string(res.report.iterations) +
                    " iteration(s), residual " + fmt("%.2e", res.report.final_relative_residual));
    }
  return c.pass;
}

// 3. ORAS equals the explicitly assembled sum of R^T D A_s^{-1} R.
bool oras_oracle() {
  Check c;
  for (int order : {1, 2})
    for (bool pml_bc : {false, true})
      for (auto kind : {dd::InterfaceKind::Pml, dd::InterfaceKind::Impedance}) {
        fem::ProblemSpec p;
        p.frequency = 0.2;
        p.n_lambda = 5.0;  // h = 1
        p.order = order;
        const double side = order == 1 ? (pml_bc ? 8.0 : 10.0) : (pml_bc ? 6.0 : 8.0);
        p.domain = grid::BoxDomain::square(0.0, side);
        p.source = fem::GaussianPoint{{side / 2, side / 2, 0.0}};
        if (pml_bc) p.global_bc = fem::PmlBoundary::uniform({}, 1.0, 2);
        const auto d = fem::discretize(p);
        const int n = d.dofmap.n_dofs;
        dd::DecompositionSpec spec;
        spec.splits = {2, 1, 1};
        spec.overlap = 2;
        spec.interface.kind = kind;
        const auto dec = dd::decompose(d.mesh, d.dofmap, spec, p);
        DenseMatrix dense = DenseMatrix::Zero(n, n);
        for (const auto& sd : dec.subdomains) {
          DenseMatrix R = DenseMatrix::Zero(sd.size(), n);
          DenseMatrix D = DenseMatrix::Zero(sd.size(), sd.size());
          for (int i = 0; i < sd.size(); ++i) {
            R(i, sd.dofs[i]) = 1.0;
            D(i, i) = static_cast<double>(sd.pou[i]);
          }
          dense += R.transpose() * D * to_dense(sd.A).inverse() * R;
        }
        DenseMatrix applied(n, n);
        ComplexVector e(n), col(n);
        for (int j = 0; j < n; ++j) {
          std::fill(e.begin(), e.end(), Complex{});
          e[j] = 1.0;
          dd::apply_oras(dec, e, col);
          for (int i = 0; i < n; ++i) applied(i, j) = col[i];
        }
        const double rel = (applied - dense).norm() / dense.norm();
        c.require(n <= 400 && rel < 1e-10,
                  "P" + std::to_string(order) + ", " + std::to_string(n) + " DoFs, " +
                      (pml_bc ? "PML" : "impedance") + " BC, " + dd::to_string(kind) +
                      " IC: relative difference " + fmt("%.2e", rel));
      }
  return c.pass;
}

// 4. Manufactured-solution convergence rates.
bool fem_convergence() {
  Check c;
  struct Study {
    int dim, order;
    std::vector<int> cells;
  };
  const std::vector<Study> studies = {
      {2, 1, {8, 16, 32, 64}}, {2, 2, {8, 16, 32, 64}}, {3, 1, {4, 8, 12, 16}}, {3, 2, {4, 8, 12, 16}}};
  for (const auto& s : studies) {
    std::vector<double> err;
    for (int n : s.cells) err.push_back(manufactured_error(s.dim, s.order, n));
    std::ostringstream line;
    line << s.dim << "D P" << s.order << " errors";
    for (double e : err) line << " " << fmt("%.3e", e);
    line << "; rates";
    bool ok = true;
    for (std::size_t i = 1; i < err.size(); ++i) {
      const double rate = std::log(err[i - 1] / err[i]) / std::log(static_cast<double>(s.cells[i]) / s.cells[i - 1]);
      line << " " << fmt("%.3f", rate);
      ok = ok && std::abs(rate - (s.order + 1)) <= 0.15 * (s.order + 1);
    }
    line << " (expected " << s.order + 1 << " within 15%)";
    c.require(ok, line.str());
  }
  return c.pass;
}

json scattering_base() {
  return json::parse(R"({
    "problem": {"dim": 2, "frequency": 1, "domain_units": "wavelengths",
                "lower": [0, 0], "upper": [10, 10],
                "hole": {"center": [5, 5], "radius": 1},
                "source": {"type": "plane_wave", "direction": [1, 0]},
                "boundary": {"type": "pml", "stretch": "sigma_minus1", "length": 1},
                "n_lambda": 20, "order": 3},
    "decomposition": null,
    "solver": {"kind": "auto", "direct_limit": 750000, "gmres": {"rel_tol": 1e-10}},
    "reference": {"kind": "analytic"}
  })");
}

// 5. Stretching-function comparison for circle scattering.
bool scattering_stretch() {
  Check c;
  auto j = scattering_base();
  j["problem"]["frequency"] = 2.0;
  std::map<std::string, double> err;
  for (const char* kind : {"sigma_minus1", "sigma_minus2", "sigma2"}) {
    j["problem"]["boundary"]["stretch"] = kind;
    const auto row = run(setting(j), kind);
    if (row.status != bench::RowStatus::Ok || !row.l2_error) {
      c.require(false, std::string(kind) + " run failed");
      return false;
    }
    err[kind] = *row.l2_error;
  }
  const double e1 = err["sigma_minus1"], e2 = err["sigma_minus2"], e3 = err["sigma2"];
  c.require(e1 >= 4e-4 && e1 <= 4e-3, "sigma_-1 error " + fmt("%.4e", e1) + " in [4e-4, 4e-3] (reference 0.00112)");
  c.require(e2 >= 5e-4 && e2 <= 5e-3, "sigma_-2 error " + fmt("%.4e", e2) + " in [5e-4, 5e-3] (reference 0.001517)");
  c.require(e3 >= 0.02 && e3 <= 0.3, "sigma_2 error " + fmt("%.4e", e3) + " in [0.02, 0.3] (reference 0.075495)");
  c.require(e1 <= e2 && e2 < e3, "ordering sigma_-1 <= sigma_-2 < sigma_2");
  return c.pass;
}

// 6. Error against PML length and the impedance baseline.
bool pml_length_trends() {
  Check c;
  auto j = scattering_base();
  std::vector<double> pml_err;
  const std::vector<double> lengths = {0.3, 0.5, 1.0, 2.0, 5.0};
  for (double L : lengths) {
    j["problem"]["boundary"]["length"] = L;
    const auto row = run(setting(j), "PML length " + fmt("%g", L) + " lambda");
    if (!row.l2_error) {
      c.require(false, "PML run failed");
      return false;
    }
    pml_err.push_back(*row.l2_error);
  }
  bool monotone = true;
  for (std::size_t i = 1; i < pml_err.size(); ++i) monotone = monotone && pml_err[i] < pml_err[i - 1];
  c.require(monotone, "error decreases strictly with PML length");

  j["problem"]["boundary"] = {{"type", "impedance"}};
  std::vector<double> imp_err;
  for (double n : {10.0, 20.0, 30.0}) {
    j["problem"]["n_lambda"] = n;
    const auto row = run(setting(j), "impedance BC, n_lambda " + fmt("%g", n));
    if (!row.l2_error) {
      c.require(false, "impedance run failed");
      return false;
    }
    imp_err.push_back(*row.l2_error);
  }
  const double ratio = imp_err[1] / pml_err[2];
  c.require(ratio >= 10.0, "impedance error / PML error at L = lambda: " + fmt("%.1f", ratio) + " >= 10");
  const auto [lo, hi] = std::minmax_element(imp_err.begin(), imp_err.end());
  const double spread = (*hi - *lo) / *lo;
  c.require(spread < 0.15, "impedance error spread over n_lambda 10/20/30: " + fmt("%.2f%%", 100 * spread) + " < 15%");
  return c.pass;
}

json dd_base() {
  return json::parse(R"({
    "problem": {"dim": 2, "lower": [0, 0], "upper": [10, 10], "source": {"type": "gaussian"},
                "boundary": {"type": "pml", "stretch": "sigma_minus1", "length": 1},
                "n_lambda": 10, "order": 2},
    "decomposition": {"splits": [8, 8], "overlap": 2, "interface": {"type": "pml", "layers": 1}},
    "solver": {"kind": "oras", "gmres": {"rel_tol": 1e-6, "max_iters": 2000}}
  })");
}

std::vector<bench::ResultRow> sweep(json j, const json& axes) {
  j["sweep"] = axes;
  bench::RunOptions opt;
  opt.write_files = false;
  opt.log = &std::cout;
  return bench::run_experiment(bench::parse_config(j), opt);
}

// 7. Iteration counts against frequency, subdomains, overlap and IC.
bool iteration_trends() {
  Check c;
  const auto rows = sweep(dd_base(), {{"frequency", {1, 2, 3}},
                                      {"ic", {"pml", "impedance"}},
                                      {"splits", {{4, 4}, {8, 8}}},
                                      {"overlap", {2, 4, 6, 8}}});
  // key: ic, splits, overlap -> iterations by frequency
  std::map<std::tuple<std::string, int, int>, std::map<double, int>> it;
  for (const auto& r : rows) {
    if (r.status != bench::RowStatus::Ok) {
      c.require(false, "run failed or did not converge: " + r.note);
      return false;
    }
    it[{r.setting.ic, r.setting.splits[0], r.setting.overlap}][r.setting.frequency] = r.iterations;
  }
  std::cout << "  ic         N    overlap  f=1  f=2  f=3\n";
  for (const auto& [key, byf] : it) {
    const auto& [ic, n, ov] = key;
    std::printf("  %-10s %dx%d  %7d  %3d  %3d  %3d\n", ic.c_str(), n, n, ov, byf.at(1.0), byf.at(2.0), byf.at(3.0));
  }
  std::cout << std::flush;
  bool a = true, b_pml = true, b_imp = true;
  double worst_spread = 0.0;
  for (int n : {4, 8})
    for (int ov : {2, 4, 6, 8}) {
      const auto& pml = it[{"pml", n, ov}];
      const auto& imp = it[{"impedance", n, ov}];
      int lo = 1 << 30, hi = 0;
      for (double f : {1.0, 2.0, 3.0}) {
        a = a && pml.at(f) < imp.at(f);
        lo = std::min(lo, pml.at(f));
        hi = std::max(hi, pml.at(f));
      }
      worst_spread = std::max(worst_spread, static_cast<double>(hi - lo) / lo);
      b_imp = b_imp && imp.at(1.0) < imp.at(2.0) && imp.at(2.0) < imp.at(3.0);
    }
  b_pml = worst_spread <= 0.25;
  c.require(a, "(a) PML ICs need fewer iterations than impedance ICs in every configuration");
  c.require(b_pml, "(b) PML-IC counts vary by at most 25% over f (worst " + fmt("%.1f%%", 100 * worst_spread) + ")");
  c.require(b_imp, "(b) impedance-IC counts increase strictly with f");
  const int ref = it[{"pml", 8, 2}][3.0];
  c.require(ref >= 25 && ref <= 60, "(c) f = 3, 8x8, overlap 2, full PML: " + std::to_string(ref) + " in [25, 60] (reference 39)");
  return c.pass;
}

// 8. Interface layer thicker than the overlap.
bool thick_interface() {
  Check c;
  auto j = dd_base();
  j["problem"]["frequency"] = 3;
  j["decomposition"]["interface"]["layers"] = 5;
  const auto rows = sweep(j, {{"overlap", {2, 6}}});
  const bool ok = rows.size() == 2 && rows[0].status == bench::RowStatus::Ok && rows[1].status == bench::RowStatus::Ok;
  if (!ok) {
    c.require(false, "runs did not converge");
    return false;
  }
  const double ratio = static_cast<double>(rows[0].iterations) / rows[1].iterations;
  c.require(ratio >= 2.0, "overlap 2: " + std::to_string(rows[0].iterations) + ", overlap 6: " +
                              std::to_string(rows[1].iterations) + ", ratio " + fmt("%.2f", ratio) +
                              " >= 2 (reference 110 vs 31)");
  return c.pass;
}

// 9. Stretching-function comparison for the preconditioner (2D surrogate).
bool preconditioner_stretch() {
  Check c;
  auto j = dd_base();
  j["problem"]["frequency"] = 1;
  j["problem"]["n_lambda"] = 5;
  j["problem"]["boundary"]["length"] = 2;
  j["decomposition"]["interface"]["layers"] = 4;
  const auto rows = sweep(j, {{"ic", {"impedance", "pml"}},
                              {"stretch", {"sigma_minus1", "sigma_minus2", "sigma2"}},
                              {"splits", {{6, 6}, {7, 7}}},
                              {"overlap", {2, 4, 6, 8}}});
  std::map<std::tuple<std::string, int, int>, std::map<pml::StretchKind, const bench::ResultRow*>> by;
  for (const auto& r : rows) by[{r.setting.ic, r.setting.splits[0], r.setting.overlap}][r.setting.stretch.kind] = &r;
  auto cell = [](const bench::ResultRow* r) {
    if (r->status == bench::RowStatus::Ok) return std::to_string(r->iterations);
    return std::string(r->status == bench::RowStatus::Unconverged ? "unconv" : "failed");
  };
  std::cout << "  ic         N    overlap  s-1     s-2     s2\n";
  bool order_ok = true, s2_ok = true;
  for (const auto& [key, m] : by) {
    const auto& [ic, n, ov] = key;
    const auto* s1 = m.at(pml::StretchKind::SigmaMinus1);
    const auto* s2 = m.at(pml::StretchKind::SigmaMinus2);
    const auto* s3 = m.at(pml::StretchKind::Sigma2);
    std::printf("  %-10s %dx%d  %7d  %-7s %-7s %-7s\n", ic.c_str(), n, n, ov, cell(s1).c_str(),
                cell(s2).c_str(), cell(s3).c_str());
    const bool c1 = s1->status == bench::RowStatus::Ok, c2 = s2->status == bench::RowStatus::Ok;
    if (c1 && c2) order_ok = order_ok && s1->iterations <= s2->iterations;
    if (c1) s2_ok = s2_ok && (s3->status != bench::RowStatus::Ok || s3->iterations >= 10 * s1->iterations);
    if (s1->status == bench::RowStatus::Error || s1->status == bench::RowStatus::OutOfMemory) order_ok = false;
  }
  std::cout << std::flush;
  c.require(order_ok, "sigma_-1 <= sigma_-2 iterations wherever both converge");
  c.require(s2_ok, "sigma_2 fails to converge in 2000 iterations or needs >= 10x the sigma_-1 count");
  return c.pass;
}

// 10. Solver and special-function properties.
bool solver_properties() {
  Check c;
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> size(20, 120);
  bool monotone = true;
  for (int t = 0; t < 50; ++t) {
    const int n = size(rng);
    const auto A = random_sparse(n, 5, rng);
    const auto b = random_vector(n, rng);
    solver::GmresConfig cfg;
    cfg.rel_tol = 1e-12;
    const auto res = solver::gmres_right(solver::as_operator(A), solver::identity_operator(), b, cfg);
    const auto& h = res.report.residual_history;
    for (std::size_t i = 1; i < h.size(); ++i) monotone = monotone && h[i] <= h[i - 1] * (1.0 + 1e-12);
    monotone = monotone && res.report.converged;
  }
  c.require(monotone, "GMRES residual histories non-increasing on 50 random systems");

  double worst_backward = 0.0, worst_oracle = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int n = size(rng);
    const auto A = random_sparse(n, 1 + t % 8, rng);
    const auto y = random_vector(n, rng);
    const auto x = solver::factorize(A)->solve(y);
    const DenseMatrix M = to_dense(A);
    const DenseVector xe = to_eigen(x), ye = to_eigen(y);
    worst_backward = std::max(worst_backward, (M * xe - ye).norm() / (M.norm() * xe.norm() + ye.norm()));
    const DenseVector xd = M.fullPivLu().solve(ye);
    worst_oracle = std::max(worst_oracle, (xe - xd).norm() / xd.norm());
  }
  c.require(worst_backward < 1e-10, "sparse LU backward error " + fmt("%.2e", worst_backward) + " < 1e-10");
  c.require(worst_oracle < 1e-10, "sparse LU vs dense LU, relative difference " + fmt("%.2e", worst_oracle));

  double worst_w = 0.0;
  for (double x = 0.05; x < 200.0; x *= 1.3) {
    const int nmax = static_cast<int>(x) + 25;
    const auto jv = bessel::bessel_j(nmax + 1, x);
    const auto yv = bessel::bessel_y(nmax + 1, x);
    for (int n = 0; n <= nmax; ++n)
      worst_w = std::max(worst_w, std::abs((jv[n + 1] * yv[n] - jv[n] * yv[n + 1]) * kPi * x / 2.0 - 1.0));
  }
  c.require(worst_w < 1e-10, "Bessel Wronskian relative deviation " + fmt("%.2e", worst_w) + " < 1e-10");
  return c.pass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  int only = 0, threads = 0;
  app.add_option("--only", only, "Run a single criterion (1-10)")->check(CLI::Range(1, 10));
  app.add_option("--threads", threads, "Worker threads")->check(CLI::NonNegativeNumber);
  CLI11_PARSE(app, argc, argv);
  set_num_threads(threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency())));

  const std::vector<std::pair<std::string, std::function<bool()>>> criteria = {
      {"partition-of-unity identity", partition_identity},
      {"single-subdomain exactness", single_subdomain},
      {"ORAS dense oracle", oras_oracle},
      {"FEM convergence rates", fem_convergence},
      {"stretching functions for circle scattering", scattering_stretch},
      {"PML length and impedance trends", pml_length_trends},
      {"iteration trends over f, N, overlap and IC", iteration_trends},
      {"interface layer thicker than overlap", thick_interface},
      {"stretching functions in the preconditioner", preconditioner_stretch},
      {"solver and Bessel properties", solver_properties},
  };
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (only && id != only) continue;
    std::cout << "criterion " << id << ": " << criteria[i].first << "\n" << std::flush;
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      ok = criteria[i].second();
    } catch (const std::exception& e) {
      std::cout << "  exception: " << e.what() << "\n";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first << ", "
              << fmt("%.1f", secs) << "s)\n" << std::flush;
    all = all && ok;
  }
  return all ? 0 : 1;
}
