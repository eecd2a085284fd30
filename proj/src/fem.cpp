#include "helmdd/fem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "helmdd/parallel.hpp"

namespace helmdd::fem {

using fe::Bary;

PmlBoundary PmlBoundary::uniform(pml::StretchFunction stretch, double length, int dim) {
  PmlBoundary b;
  b.stretch = stretch;
  for (int f = 0; f < 2 * dim; ++f) b.lengths[f] = length;
  return b;
}

std::optional<pml::PmlSpec> ProblemSpec::pml_spec() const {
  const auto* p = std::get_if<PmlBoundary>(&global_bc);
  if (!p) return std::nullopt;
  pml::PmlSpec spec;
  spec.stretch = p->stretch;
  spec.lengths = p->lengths;
  spec.omega = omega();
  return spec;
}

grid::BoxDomain ProblemSpec::computational_domain() const {
  const auto spec = pml_spec();
  return spec ? pml::extended_domain(domain, *spec) : domain;
}

void ProblemSpec::validate() const {
  if (!(frequency > 0.0)) throw InvalidInput("problem: frequency must be positive");
  if (!(wave_speed > 0.0)) throw InvalidInput("problem: wave speed must be positive");
  if (!(n_lambda > 0.0)) throw InvalidInput("problem: n_lambda must be positive");
  domain.validate();
  const int max_order = domain.dim == 2 ? 3 : 2;
  if (order < 1 || order > max_order) throw InvalidInput("problem: unsupported element order");
  if (const auto* p = std::get_if<PmlBoundary>(&global_bc)) {
    for (int f = 0; f < 2 * domain.dim; ++f)
      if (p->lengths[f] < 0.0) throw InvalidInput("problem: PML lengths must be >= 0");
    if (p->stretch.kind == pml::StretchKind::Sigma2 && !(p->stretch.alpha > 0.0))
      throw InvalidInput("problem: alpha must be positive");
  }
  const bool scattering = std::holds_alternative<PlaneWaveScattering>(source);
  if (scattering && !domain.hole)
    throw InvalidInput("problem: plane-wave scattering needs a hole (scatterer)");
  if (!scattering && domain.hole)
    throw InvalidInput("problem: a hole is only supported with plane-wave scattering");
}

Patch Patch::whole(const grid::StructuredMesh& mesh, const DofMap& dofmap) {
  Patch p;
  p.elements.resize(mesh.n_elements());
  std::iota(p.elements.begin(), p.elements.end(), 0);
  p.dofs.resize(dofmap.n_dofs);
  std::iota(p.dofs.begin(), p.dofs.end(), 0);
  return p;
}

Patch Patch::of_elements(const DofMap& dofmap, std::vector<int> elements) {
  Patch p;
  std::sort(elements.begin(), elements.end());
  elements.erase(std::unique(elements.begin(), elements.end()), elements.end());
  p.elements = std::move(elements);
  for (int e : p.elements)
    for (int d : dofmap.dofs(e)) p.dofs.push_back(d);
  std::sort(p.dofs.begin(), p.dofs.end());
  p.dofs.erase(std::unique(p.dofs.begin(), p.dofs.end()), p.dofs.end());
  return p;
}

namespace {

struct Geometry {
  std::array<Point, 4> v{};
  double abs_det = 0.0;
  std::array<std::array<double, 3>, 4> grad{};  // gradients of barycentrics
  const grid::StructuredMesh* mesh = nullptr;
  int element = -1;
  bool curved = false;
};

/// Position, |det J| and barycentric gradients at one point of an element.
struct PointGeometry {
  Point x{};
  double abs_det = 0.0;
  std::array<std::array<double, 3>, 4> grad{};
};

// J[a][i] = d x_a / d xi_i with xi_i = lambda_{i+1}.
void invert_jacobian(const double (&J)[3][3], int dim, double& abs_det,
                     std::array<std::array<double, 3>, 4>& grad) {
  double inv[3][3] = {};
  double det;
  if (dim == 2) {
    det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
    inv[0][0] = J[1][1] / det;
    inv[0][1] = -J[0][1] / det;
    inv[1][0] = -J[1][0] / det;
    inv[1][1] = J[0][0] / det;
  } else {
    det = J[0][0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1]) -
          J[0][1] * (J[1][0] * J[2][2] - J[1][2] * J[2][0]) +
          J[0][2] * (J[1][0] * J[2][1] - J[1][1] * J[2][0]);
    inv[0][0] = (J[1][1] * J[2][2] - J[1][2] * J[2][1]) / det;
    inv[0][1] = (J[0][2] * J[2][1] - J[0][1] * J[2][2]) / det;
    inv[0][2] = (J[0][1] * J[1][2] - J[0][2] * J[1][1]) / det;
    inv[1][0] = (J[1][2] * J[2][0] - J[1][0] * J[2][2]) / det;
    inv[1][1] = (J[0][0] * J[2][2] - J[0][2] * J[2][0]) / det;
    inv[1][2] = (J[0][2] * J[1][0] - J[0][0] * J[1][2]) / det;
    inv[2][0] = (J[1][0] * J[2][1] - J[1][1] * J[2][0]) / det;
    inv[2][1] = (J[0][1] * J[2][0] - J[0][0] * J[2][1]) / det;
    inv[2][2] = (J[0][0] * J[1][1] - J[0][1] * J[1][0]) / det;
  }
  abs_det = std::abs(det);
  for (int a = 0; a < 3; ++a) grad[0][a] = 0.0;
  for (int i = 0; i < dim; ++i)
    for (int a = 0; a < 3; ++a) {
      grad[i + 1][a] = a < dim ? inv[i][a] : 0.0;
      grad[0][a] -= grad[i + 1][a];
    }
}

Geometry element_geometry(const grid::StructuredMesh& mesh, int e) {
  const int dim = mesh.dim();
  Geometry g;
  g.mesh = &mesh;
  g.element = e;
  g.curved = !mesh.curved_facet.empty() && mesh.curved_facet[e] >= 0;
  for (int i = 0; i <= dim; ++i) g.v[i] = mesh.vertices[mesh.elements[e][i]];
  double J[3][3] = {};
  for (int a = 0; a < dim; ++a)
    for (int i = 0; i < dim; ++i) J[a][i] = g.v[i + 1][a] - g.v[0][a];
  invert_jacobian(J, dim, g.abs_det, g.grad);
  return g;
}

Point map_point(const Geometry& g, int dim, const Bary& lam) {
  if (g.curved) return grid::element_map(*g.mesh, g.element, lam);
  Point x{0.0, 0.0, 0.0};
  for (int i = 0; i <= dim; ++i)
    for (int a = 0; a < dim; ++a) x[a] += lam[i] * g.v[i][a];
  return x;
}

PointGeometry point_geometry(const Geometry& g, int dim, const Bary& lam) {
  PointGeometry p;
  if (!g.curved) {
    p.x = map_point(g, dim, lam);
    p.abs_det = g.abs_det;
    p.grad = g.grad;
    return p;
  }
  std::array<Point, 4> d{};
  p.x = grid::element_map(*g.mesh, g.element, lam, &d);
  double J[3][3] = {};
  for (int a = 0; a < dim; ++a)
    for (int i = 0; i < dim; ++i) J[a][i] = d[i + 1][a] - d[0][a];
  invert_jacobian(J, dim, p.abs_det, p.grad);
  return p;
}

double facet_measure(const Geometry& g, int dim, int facet) {
  std::array<Point, 3> p{};
  int n = 0;
  for (int i = 0; i <= dim; ++i)
    if (i != facet) p[n++] = g.v[i];
  if (dim == 2) return std::hypot(p[1][0] - p[0][0], p[1][1] - p[0][1]);
  const double ux = p[1][0] - p[0][0], uy = p[1][1] - p[0][1], uz = p[1][2] - p[0][2];
  const double vx = p[2][0] - p[0][0], vy = p[2][1] - p[0][1], vz = p[2][2] - p[0][2];
  const double cx = uy * vz - uz * vy, cy = uz * vx - ux * vz, cz = ux * vy - uy * vx;
  return 0.5 * std::sqrt(cx * cx + cy * cy + cz * cz);
}

std::vector<int> global_to_local(const DofMap& dofmap, const Patch& patch) {
  std::vector<int> g2l(dofmap.n_dofs, -1);
  for (int i = 0; i < patch.size(); ++i) g2l[patch.dofs[i]] = i;
  return g2l;
}

SparseComplexMatrix build_pattern(const DofMap& dofmap, const Patch& patch,
                                  const std::vector<int>& g2l) {
  const int n = patch.size();
  const int npe = dofmap.nodes_per_element;
  std::vector<int> count(n + 1, 0);
  for (int e : patch.elements)
    for (int d : dofmap.dofs(e)) ++count[g2l[d] + 1];
  std::partial_sum(count.begin(), count.end(), count.begin());
  std::vector<int> incident(count.back());
  std::vector<int> fill(count.begin(), count.end() - 1);
  for (std::size_t k = 0; k < patch.elements.size(); ++k)
    for (int d : dofmap.dofs(patch.elements[k])) incident[fill[g2l[d]]++] = static_cast<int>(k);

  std::vector<int> row_ptr(n + 1, 0);
  std::vector<int> cols;
  std::vector<int> scratch;
  for (int r = 0; r < n; ++r) {
    scratch.clear();
    for (int k = count[r]; k < count[r + 1]; ++k)
      for (int d : dofmap.dofs(patch.elements[incident[k]])) scratch.push_back(g2l[d]);
    std::sort(scratch.begin(), scratch.end());
    scratch.erase(std::unique(scratch.begin(), scratch.end()), scratch.end());
    cols.insert(cols.end(), scratch.begin(), scratch.end());
    row_ptr[r + 1] = static_cast<int>(cols.size());
  }
  (void)npe;
  std::vector<Complex> vals(cols.size(), Complex{0.0, 0.0});
  return {n, n, std::move(row_ptr), std::move(cols), std::move(vals)};
}

inline pml::StretchCoefficients coefficients_at(const CoefficientField& f, const Point& x) {
  return f ? f(x) : pml::StretchCoefficients{};
}

}  // namespace

fe::Bary barycentric(const grid::StructuredMesh& mesh, int e, const Point& x) {
  const Geometry g = element_geometry(mesh, e);
  const int dim = mesh.dim();
  Bary lam{0.0, 0.0, 0.0, 0.0};
  double sum = 0.0;
  for (int i = 1; i <= dim; ++i) {
    double l = 0.0;
    for (int a = 0; a < dim; ++a) l += g.grad[i][a] * (x[a] - g.v[0][a]);
    lam[i] = l;
    sum += l;
  }
  lam[0] = 1.0 - sum;
  if (!g.curved) return lam;
  // Newton on the blended map, starting from the straight-sided guess.
  for (int it = 0; it < 30; ++it) {
    const PointGeometry p = point_geometry(g, dim, lam);
    double step = 0.0;
    sum = 0.0;
    for (int i = 1; i <= dim; ++i) {
      double dl = 0.0;
      for (int a = 0; a < dim; ++a) dl += p.grad[i][a] * (x[a] - p.x[a]);
      lam[i] += dl;
      sum += lam[i];
      step = std::max(step, std::abs(dl));
    }
    lam[0] = 1.0 - sum;
    if (step < 1e-14) break;
  }
  return lam;
}

SparseComplexMatrix assemble_operator(const grid::StructuredMesh& mesh, const DofMap& dofmap,
                                      const Patch& patch, const OperatorTerms& terms) {
  if (!terms.wavenumber) throw InvalidInput("assemble_operator: wavenumber field required");
  const int dim = mesh.dim();
  const int npe = dofmap.nodes_per_element;
  const int degree = terms.quadrature_degree > 0 ? terms.quadrature_degree : 2 * dofmap.order;
  const fe::Tabulation tab = fe::tabulate_volume(dofmap.element, degree);
  const int nq = tab.rule.size();

  const std::vector<int> g2l = global_to_local(dofmap, patch);
  SparseComplexMatrix A = build_pattern(dofmap, patch, g2l);
  const auto row_ptr = A.row_ptr();
  const auto col_idx = A.col_idx();

  auto positions_for = [&](int e, std::vector<long>& pos) {
    const auto dofs = dofmap.dofs(e);
    for (int a = 0; a < npe; ++a) {
      const int r = g2l[dofs[a]];
      const auto begin = col_idx.begin() + row_ptr[r];
      const auto end = col_idx.begin() + row_ptr[r + 1];
      for (int b = 0; b < npe; ++b) {
        const int c = g2l[dofs[b]];
        pos[a * npe + b] = std::lower_bound(begin, end, c) - col_idx.begin();
      }
    }
  };

  const int n_el = static_cast<int>(patch.elements.size());
  const int workers = std::max(1, std::min(num_threads(), n_el / 64 + 1));
  std::vector<std::vector<Complex>> partial(workers > 1 ? workers : 0);

  parallel_for(
      n_el,
      [&](int begin, int end, int w) {
        std::span<Complex> out = A.values();
        if (workers > 1) {
          partial[w].assign(A.nnz(), Complex{0.0, 0.0});
          out = partial[w];
        }
        std::vector<long> pos(static_cast<std::size_t>(npe) * npe);
        std::vector<Complex> Ke(static_cast<std::size_t>(npe) * npe);
        std::vector<std::array<double, 3>> grads(npe);
        for (int k = begin; k < end; ++k) {
          const int e = patch.elements[k];
          const Geometry g = element_geometry(mesh, e);
          std::fill(Ke.begin(), Ke.end(), Complex{0.0, 0.0});
          for (int q = 0; q < nq; ++q) {
            const PointGeometry pg = point_geometry(g, dim, tab.rule.points[q]);
            const Point& x = pg.x;
            const auto c = coefficients_at(terms.coefficients, x);
            const double kk = terms.wavenumber(x);
            const double w = tab.weights[q] * pg.abs_det;
            const Complex mass = -kk * kk * c.jacobian * w;
            std::array<Complex, 3> diff{c.tensor[0] * w, c.tensor[1] * w, c.tensor[2] * w};
            const double* phi = &tab.phi[static_cast<std::size_t>(q) * npe];
            const auto* dphi = &tab.dphi[static_cast<std::size_t>(q) * npe];
            for (int a = 0; a < npe; ++a) {
              std::array<double, 3> gr{0.0, 0.0, 0.0};
              for (int i = 0; i <= dim; ++i)
                for (int ax = 0; ax < dim; ++ax) gr[ax] += dphi[a][i] * pg.grad[i][ax];
              grads[a] = gr;
            }
            for (int a = 0; a < npe; ++a) {
              for (int b = 0; b < npe; ++b) {
                Complex v = mass * (phi[a] * phi[b]);
                for (int ax = 0; ax < dim; ++ax) v += diff[ax] * (grads[a][ax] * grads[b][ax]);
                Ke[a * npe + b] += v;
              }
            }
          }
          positions_for(e, pos);
          for (int i = 0; i < npe * npe; ++i) out[pos[i]] += Ke[i];
        }
      },
      workers);

  if (workers > 1) {
    auto vals = A.values();
    for (int w = 0; w < workers; ++w)
      for (std::size_t i = 0; i < vals.size(); ++i) vals[i] += partial[w][i];
  }

  if (!terms.robin.empty()) {
    std::vector<fe::Tabulation> ftab;
    for (int f = 0; f <= dim; ++f) ftab.push_back(fe::tabulate_facet(dofmap.element, f, degree));
    const double ref_scale = dim == 2 ? 1.0 : 2.0;  // physical measure / reference measure
    std::vector<long> pos(static_cast<std::size_t>(npe) * npe);
    auto vals = A.values();
    for (const auto& rf : terms.robin) {
      const Geometry g = element_geometry(mesh, rf.element);
      const fe::Tabulation& t = ftab[rf.local_facet];
      const double meas = facet_measure(g, dim, rf.local_facet) * ref_scale;
      const auto& fnodes = dofmap.element.facet_nodes(rf.local_facet);
      positions_for(rf.element, pos);
      for (int q = 0; q < t.rule.size(); ++q) {
        const Point x = map_point(g, dim, t.rule.points[q]);
        const auto c = coefficients_at(terms.coefficients, x);
        const double kk = terms.wavenumber(x);
        const Complex coef = kI * kk * (c.jacobian / c.stretch[rf.normal_axis]) * t.weights[q] * meas;
        const double* phi = &t.phi[static_cast<std::size_t>(q) * npe];
        for (int a : fnodes)
          for (int b : fnodes) vals[pos[a * npe + b]] += coef * (phi[a] * phi[b]);
      }
    }
  }
  return A;
}

ComplexVector assemble_load(const grid::StructuredMesh& mesh, const DofMap& dofmap,
                            const Patch& patch, const ScalarField& source,
                            const CoefficientField& coefficients, int quadrature_degree) {
  ComplexVector b(patch.size(), Complex{0.0, 0.0});
  if (!source) return b;
  const int dim = mesh.dim();
  const int npe = dofmap.nodes_per_element;
  const int degree = quadrature_degree > 0 ? quadrature_degree : 2 * dofmap.order;
  const fe::Tabulation tab = fe::tabulate_volume(dofmap.element, degree);
  const std::vector<int> g2l = global_to_local(dofmap, patch);
  for (int e : patch.elements) {
    const Geometry g = element_geometry(mesh, e);
    const auto dofs = dofmap.dofs(e);
    for (int q = 0; q < tab.rule.size(); ++q) {
      const PointGeometry pg = point_geometry(g, dim, tab.rule.points[q]);
      const Complex val = source(pg.x);
      if (val == Complex{0.0, 0.0}) continue;
      const Complex f = val * coefficients_at(coefficients, pg.x).jacobian * tab.weights[q] * pg.abs_det;
      const double* phi = &tab.phi[static_cast<std::size_t>(q) * npe];
      for (int a = 0; a < npe; ++a) b[g2l[dofs[a]]] += f * phi[a];
    }
  }
  return b;
}

void apply_dirichlet(SparseComplexMatrix& A, ComplexVector& b, std::span<const int> dofs,
                     std::span<const Complex> values) {
  if (dofs.size() != values.size()) throw InvalidInput("apply_dirichlet: size mismatch");
  const int n = A.rows();
  std::vector<char> fixed(n, 0);
  ComplexVector g(n, Complex{0.0, 0.0});
  for (std::size_t i = 0; i < dofs.size(); ++i) {
    fixed[dofs[i]] = 1;
    g[dofs[i]] = values[i];
  }
  const auto ptr = A.row_ptr();
  const auto idx = A.col_idx();
  auto val = A.values();
  for (int r = 0; r < n; ++r) {
    if (fixed[r]) {
      for (int k = ptr[r]; k < ptr[r + 1]; ++k) val[k] = idx[k] == r ? Complex{1.0, 0.0} : Complex{};
      b[r] = g[r];
      continue;
    }
    for (int k = ptr[r]; k < ptr[r + 1]; ++k) {
      if (!fixed[idx[k]]) continue;
      b[r] -= val[k] * g[idx[k]];
      val[k] = Complex{0.0, 0.0};
    }
  }
  A.prune_zeros();
}

std::vector<int> facet_dofs(const DofMap& dofmap, std::span<const grid::BoundaryFacet> facets) {
  std::vector<int> out;
  for (const auto& f : facets) {
    const auto dofs = dofmap.dofs(f.element);
    for (int a : dofmap.element.facet_nodes(f.local_facet)) out.push_back(dofs[a]);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool face_is_impedance(const ProblemSpec& problem, int face) {
  if (const auto* p = std::get_if<PmlBoundary>(&problem.global_bc)) return p->lengths[face] <= 0.0;
  return true;
}

RhsData make_rhs(const ProblemSpec& problem, const grid::StructuredMesh& mesh,
                 const DofMap& dofmap) {
  const bool scattering = std::holds_alternative<PlaneWaveScattering>(problem.source);
  if (scattering && !mesh.domain.hole)
    throw InvalidInput("make_rhs: plane-wave scattering requires a hole");
  if (!scattering && mesh.domain.hole)
    throw InvalidInput("make_rhs: Gaussian source is not defined with a hole");
  const double k = problem.wavenumber();
  const CoefficientField coeffs = global_coefficients(problem);
  const Patch patch = Patch::whole(mesh, dofmap);

  RhsData rhs;
  if (const auto* gp = std::get_if<GaussianPoint>(&problem.source)) {
    const Point c = gp->center;
    const int dim = mesh.dim();
    ScalarField g = [c, k, dim](const Point& x) {
      double r2 = 0.0;
      for (int a = 0; a < dim; ++a) r2 += (x[a] - c[a]) * (x[a] - c[a]);
      return Complex{std::exp(-30.0 * k * r2), 0.0};
    };
    rhs.load = assemble_load(mesh, dofmap, patch, g, coeffs);
  } else {
    rhs.load.assign(dofmap.n_dofs, Complex{0.0, 0.0});
  }

  std::vector<int> dirichlet;
  std::vector<Complex> values;
  std::vector<grid::BoundaryFacet> outer;
  for (const auto& f : mesh.boundary_facets)
    if (f.label != grid::kHoleLabel && !face_is_impedance(problem, f.label)) outer.push_back(f);
  for (int d : facet_dofs(dofmap, outer)) {
    dirichlet.push_back(d);
    values.push_back(Complex{0.0, 0.0});
  }
  if (const auto* pw = std::get_if<PlaneWaveScattering>(&problem.source)) {
    std::vector<grid::BoundaryFacet> hole;
    for (const auto& f : mesh.boundary_facets)
      if (f.label == grid::kHoleLabel) hole.push_back(f);
    double norm = 0.0;
    for (int a = 0; a < mesh.dim(); ++a) norm += pw->direction[a] * pw->direction[a];
    norm = std::sqrt(norm);
    for (int d : facet_dofs(dofmap, hole)) {
      const Point& x = dofmap.dof_coords[d];
      double dx = 0.0;
      for (int a = 0; a < mesh.dim(); ++a) dx += pw->direction[a] / norm * x[a];
      dirichlet.push_back(d);
      values.push_back(-std::exp(kI * k * dx));
    }
  }
  // outer and hole DoF sets are disjoint: the hole stays two cells off the box
  std::vector<std::size_t> order(dirichlet.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return dirichlet[a] < dirichlet[b]; });
  for (auto i : order) {
    rhs.dirichlet_dofs.push_back(dirichlet[i]);
    rhs.dirichlet_values.push_back(values[i]);
  }
  return rhs;
}

CoefficientField global_coefficients(const ProblemSpec& problem) {
  const auto spec = problem.pml_spec();
  if (!spec) return {};
  const grid::BoxDomain physical = problem.domain;
  return [spec = *spec, physical](const Point& x) { return pml::stretch_coeffs(spec, physical, x); };
}

AssembledSystem assemble(const grid::StructuredMesh& mesh, const DofMap& dofmap,
                         const ProblemSpec& problem, const CoefficientField& coefficients) {
  const double k = problem.wavenumber();
  OperatorTerms terms;
  terms.wavenumber = [k](const Point&) { return k; };
  terms.coefficients = coefficients;
  for (const auto& f : mesh.boundary_facets)
    if (f.label != grid::kHoleLabel && face_is_impedance(problem, f.label))
      terms.robin.push_back({f.element, f.local_facet, grid::face_axis(f.label)});

  const Patch patch = Patch::whole(mesh, dofmap);
  AssembledSystem sys;
  sys.A = assemble_operator(mesh, dofmap, patch, terms);
  RhsData rhs = make_rhs(problem, mesh, dofmap);
  sys.b = std::move(rhs.load);
  apply_dirichlet(sys.A, sys.b, rhs.dirichlet_dofs, rhs.dirichlet_values);
  sys.dirichlet_dofs = std::move(rhs.dirichlet_dofs);
  sys.local_to_global = patch.dofs;
  sys.dofmap = &dofmap;
  return sys;
}

double l2_relative_error(std::span<const Complex> u_h, const ScalarField& reference,
                         const grid::StructuredMesh& mesh, const DofMap& dofmap,
                         bool physical_only, const grid::BoxDomain& physical,
                         int quadrature_degree) {
  if (u_h.size() != static_cast<std::size_t>(dofmap.n_dofs))
    throw InvalidInput("l2_relative_error: vector size mismatch");
  const int dim = mesh.dim();
  const int npe = dofmap.nodes_per_element;
  const int degree = quadrature_degree > 0 ? quadrature_degree : 2 * dofmap.order + 2;
  const fe::Tabulation tab = fe::tabulate_volume(dofmap.element, degree);
  double err2 = 0.0, ref2 = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const Geometry g = element_geometry(mesh, e);
    if (physical_only) {
      Point c{0.0, 0.0, 0.0};
      for (int i = 0; i <= dim; ++i)
        for (int a = 0; a < dim; ++a) c[a] += g.v[i][a] / (dim + 1);
      if (!physical.contains(c)) continue;
    }
    const auto dofs = dofmap.dofs(e);
    for (int q = 0; q < tab.rule.size(); ++q) {
      const PointGeometry pg = point_geometry(g, dim, tab.rule.points[q]);
      const double* phi = &tab.phi[static_cast<std::size_t>(q) * npe];
      Complex uh{0.0, 0.0};
      for (int a = 0; a < npe; ++a) uh += u_h[dofs[a]] * phi[a];
      const Complex ur = reference(pg.x);
      const double w = tab.weights[q] * pg.abs_det;
      err2 += w * std::norm(uh - ur);
      ref2 += w * std::norm(ur);
    }
  }
  if (!(ref2 > 0.0)) throw InvalidInput("l2_relative_error: reference has zero norm");
  return std::sqrt(err2 / ref2);
}

Discretization discretize(const ProblemSpec& problem) {
  problem.validate();
  Discretization d;
  d.problem = problem;
  d.mesh = grid::build_mesh(problem.computational_domain(), problem.mesh_size(), problem.curved_hole);
  d.dofmap = fe::build_dofmap(d.mesh, problem.order);
  d.system = assemble(d.mesh, d.dofmap, problem, global_coefficients(problem));
  d.system.dofmap = nullptr;  // d.dofmap moves with the returned value
  return d;
}

FieldEvaluator::FieldEvaluator(const grid::StructuredMesh& mesh, const DofMap& dofmap,
                               ComplexVector values)
    : mesh_(&mesh), dofmap_(&dofmap), values_(std::move(values)) {
  if (values_.size() != static_cast<std::size_t>(dofmap.n_dofs))
    throw InvalidInput("FieldEvaluator: vector size mismatch");
}

Complex FieldEvaluator::operator()(const Point& x) const {
  const auto& mesh = *mesh_;
  const int dim = mesh.dim();
  const grid::Index3 c0 = mesh.locate_cell(x);
  int best = -1;
  double best_min = -1e300;
  Bary best_lam{};
  // Search the containing cell first, then its neighbours (hole boundary cuts).
  for (int ring = 0; ring <= 1 && best_min < -1e-12; ++ring) {
    grid::Index3 lo{0, 0, 0}, hi{0, 0, 0};
    for (int a = 0; a < dim; ++a) {
      lo[a] = std::max(0, c0[a] - ring);
      hi[a] = std::min(mesh.cells[a] - 1, c0[a] + ring);
    }
    grid::Index3 c{0, 0, 0};
    for (c[2] = lo[2]; c[2] <= hi[2]; ++c[2])
      for (c[1] = lo[1]; c[1] <= hi[1]; ++c[1])
        for (c[0] = lo[0]; c[0] <= hi[0]; ++c[0]) {
          const int lc = mesh.linear_cell(c);
          for (int i = mesh.cell_offsets[lc]; i < mesh.cell_offsets[lc + 1]; ++i) {
            const int e = mesh.cell_elements[i];
            const Bary lam = barycentric(mesh, e, x);
            double m = lam[0];
            for (int j = 1; j <= dim; ++j) m = std::min(m, lam[j]);
            if (m > best_min) {
              best_min = m;
              best = e;
              best_lam = lam;
            }
          }
        }
  }
  if (best < 0) throw InvalidInput("FieldEvaluator: point not covered by the mesh");
  const auto dofs = dofmap_->dofs(best);
  Complex v{0.0, 0.0};
  for (int a = 0; a < dofmap_->nodes_per_element; ++a)
    v += values_[dofs[a]] * dofmap_->element.value(a, best_lam);
  return v;
}

}  // namespace helmdd::fem
