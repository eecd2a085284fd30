#include "helmdd/dd.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include "helmdd/parallel.hpp"

namespace helmdd::dd {

int DecompositionSpec::growth() const {
  return convention == OverlapConvention::PerSide ? overlap : (overlap + 1) / 2;
}

void DecompositionSpec::validate(int dim) const {
  for (int a = 0; a < dim; ++a)
    if (splits[a] < 1) throw InvalidInput("decomposition: splits must be >= 1");
  if (overlap < 1) throw InvalidInput("decomposition: overlap must be >= 1");
  if (interface.kind == InterfaceKind::Pml) {
    if (interface.layers < 1) throw InvalidInput("decomposition: interface layers must be >= 1");
    if (interface.stretch.kind == pml::StretchKind::Sigma2 && !(interface.stretch.alpha > 0.0))
      throw InvalidInput("decomposition: alpha must be positive");
  }
}

std::vector<std::string> DecompositionSpec::warnings() const {
  std::vector<std::string> w;
  if (interface.kind == InterfaceKind::Pml && interface.layers >= growth())
    w.push_back("interface PML (" + std::to_string(interface.layers) +
                " layers) is not strictly inside the overlap (" + std::to_string(growth()) +
                " layers per side); convergence may degrade");
  return w;
}

std::string to_string(OverlapConvention c) {
  return c == OverlapConvention::PerSide ? "per_side" : "shared_total";
}

OverlapConvention parse_overlap_convention(const std::string& name) {
  if (name == "per_side") return OverlapConvention::PerSide;
  if (name == "shared_total") return OverlapConvention::SharedTotal;
  throw InvalidInput("unknown overlap convention: " + name);
}

std::string to_string(InterfaceKind k) { return k == InterfaceKind::Pml ? "pml" : "impedance"; }

InterfaceKind parse_interface_kind(const std::string& name) {
  if (name == "pml") return InterfaceKind::Pml;
  if (name == "impedance") return InterfaceKind::Impedance;
  throw InvalidInput("unknown interface condition: " + name);
}

std::vector<int> split_axis(int n, int parts) {
  if (parts < 1 || parts > n) throw InvalidInput("split_axis: need 1 <= parts <= cells");
  std::vector<int> bounds(parts + 1, 0);
  const int base = n / parts, rem = n % parts;
  for (int i = 0; i < parts; ++i) bounds[i + 1] = bounds[i] + base + (i < rem ? 1 : 0);
  return bounds;
}

std::vector<grid::CellBox> split_boxes(const grid::StructuredMesh& mesh,
                                       const grid::Index3& splits) {
  const int dim = mesh.dim();
  std::array<std::vector<int>, 3> b;
  for (int a = 0; a < 3; ++a) b[a] = a < dim ? split_axis(mesh.cells[a], splits[a]) : std::vector<int>{0, 1};
  const int nz = dim == 3 ? splits[2] : 1;
  std::vector<grid::CellBox> boxes;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < splits[1]; ++j)
      for (int i = 0; i < splits[0]; ++i) {
        grid::CellBox box;
        box.begin = {b[0][i], b[1][j], b[2][k]};
        box.end = {b[0][i + 1], b[1][j + 1], b[2][k + 1]};
        boxes.push_back(box);
      }
  return boxes;
}

void check_decomposition(const grid::Index3& cells, int dim, const DecompositionSpec& spec) {
  spec.validate(dim);
  const int g = spec.growth();
  for (int a = 0; a < dim; ++a) {
    if (spec.splits[a] > cells[a])
      throw InvalidInput("decompose: more subdomains than cells on axis " + std::to_string(a));
    if (spec.splits[a] == 1) continue;
    const auto b = split_axis(cells[a], spec.splits[a]);
    for (int i = 0; i < spec.splits[a]; ++i)
      if (b[i + 1] - b[i] <= g)
        throw InvalidInput("decompose: overlap of " + std::to_string(g) +
                           " layers covers a whole neighbouring subdomain");
  }
}

namespace {

struct LocalFacet {
  int element;
  int local_facet;
  int face;  // local box face it lies on
};

// Facets of patch elements whose neighbour is outside the local box.
std::vector<LocalFacet> interface_facets(const grid::StructuredMesh& mesh, const Subdomain& sd) {
  std::vector<LocalFacet> out;
  const int dim = mesh.dim();
  for (int e : sd.elements)
    for (int f = 0; f <= dim; ++f) {
      const int nb = mesh.facet_neighbor[e][f];
      if (nb < 0) continue;
      const auto& c = mesh.element_cell[nb];
      if (sd.local_box.contains(c, dim)) continue;
      const auto& ce = mesh.element_cell[e];
      int face = -1;
      for (int a = 0; a < dim; ++a)
        if (c[a] != ce[a]) face = 2 * a + (c[a] > ce[a] ? 1 : 0);
      if (face < 0) throw InternalError("interface_facets: neighbour in the same cell");
      out.push_back({e, f, face});
    }
  return out;
}

// Hole meshing moves vertices off the lattice; such elements may cross the
// truncation plane of an interface layer.
bool displaced(const grid::StructuredMesh& mesh, int e) {
  if (!mesh.curved_facet.empty() && mesh.curved_facet[e] >= 0) return true;
  for (int i = 0; i <= mesh.dim(); ++i) {
    const int v = mesh.elements[e][i];
    for (int a = 0; a < mesh.dim(); ++a)
      if (mesh.vertices[v][a] != mesh.lattice_coordinate(a, mesh.vertex_lattice[v][a])) return true;
  }
  return false;
}

void build_local_system(const grid::StructuredMesh& mesh, const fe::DofMap& dofmap,
                        const DecompositionSpec& spec, const fem::ProblemSpec& problem,
                        Subdomain& sd) {
  const int dim = mesh.dim();
  const double k = problem.wavenumber();
  const auto global_pml = problem.pml_spec();
  const grid::BoxDomain physical = problem.domain;

  fem::OperatorTerms terms;
  terms.wavenumber = [k](const Point&) { return k; };

  std::vector<char> in_patch(mesh.n_elements(), 0);
  for (int e : sd.elements) in_patch[e] = 1;
  std::vector<grid::BoundaryFacet> global_dirichlet;
  for (const auto& f : mesh.boundary_facets) {
    if (!in_patch[f.element]) continue;
    if (f.label != grid::kHoleLabel && fem::face_is_impedance(problem, f.label))
      terms.robin.push_back({f.element, f.local_facet, grid::face_axis(f.label)});
    else
      global_dirichlet.push_back(f);
  }

  const auto iface = interface_facets(mesh, sd);
  std::vector<grid::BoundaryFacet> local_dirichlet;
  if (spec.interface.kind == InterfaceKind::Impedance) {
    terms.coefficients = fem::global_coefficients(problem);
    for (const auto& f : iface) terms.robin.push_back({f.element, f.local_facet, f.face / 2});
  } else {
    pml::InterfaceLayer layer;
    layer.stretch = spec.interface.stretch;
    layer.omega = problem.omega();
    layer.dim = dim;
    layer.layers = spec.interface.layers;
    layer.spacing = mesh.spacing;
    layer.interior_face = sd.interior_face;
    for (int a = 0; a < dim; ++a) {
      layer.lower[a] = mesh.lattice_coordinate(a, sd.local_box.begin[a]);
      layer.upper[a] = mesh.lattice_coordinate(a, sd.local_box.end[a]);
    }
    terms.coefficients = [global_pml, physical, layer](const Point& x) {
      return pml::interface_stretch_coeffs(global_pml, physical, layer, x);
    };
    for (const auto& f : iface) local_dirichlet.push_back({f.element, f.local_facet, f.face});
    for (int e : sd.elements)
      for (int face = 0; face < 2 * dim; ++face) {
        if (!sd.interior_face[face]) continue;
        const int a = grid::face_axis(face);
        const int c = mesh.element_cell[e][a];
        const int dist = grid::face_side(face) == 0 ? c - sd.local_box.begin[a]
                                                    : sd.local_box.end[a] - 1 - c;
        if (dist <= spec.interface.layers && displaced(mesh, e))
          throw InvalidInput("decompose: interface PML of subdomain " + std::to_string(sd.id) +
                             " meets the obstacle boundary; move the splits or use impedance interfaces");
        if (dist < spec.interface.layers) {
          sd.interface_pml_elements.push_back(e);
          break;
        }
      }
  }

  fem::Patch patch;
  patch.elements = sd.elements;
  patch.dofs = sd.dofs;
  sd.A = fem::assemble_operator(mesh, dofmap, patch, terms);

  std::vector<int> fixed = fem::facet_dofs(dofmap, global_dirichlet);
  const auto extra = fem::facet_dofs(dofmap, local_dirichlet);
  fixed.insert(fixed.end(), extra.begin(), extra.end());
  std::sort(fixed.begin(), fixed.end());
  fixed.erase(std::unique(fixed.begin(), fixed.end()), fixed.end());
  std::vector<int> local;
  local.reserve(fixed.size());
  for (int g : fixed) {
    const auto it = std::lower_bound(sd.dofs.begin(), sd.dofs.end(), g);
    local.push_back(static_cast<int>(it - sd.dofs.begin()));
  }
  ComplexVector b(sd.size(), Complex{0.0, 0.0});
  const ComplexVector zeros(local.size(), Complex{0.0, 0.0});
  fem::apply_dirichlet(sd.A, b, local, zeros);
}

}  // namespace

Decomposition decompose(const grid::StructuredMesh& mesh, const fe::DofMap& dofmap,
                        const DecompositionSpec& spec, const fem::ProblemSpec& problem,
                        const DecomposeOptions& options) {
  const int dim = mesh.dim();
  spec.validate(dim);
  if (dofmap.dim != dim) throw InvalidInput("decompose: mesh and dof map disagree");
  check_decomposition(mesh.cells, dim, spec);
  const auto boxes = split_boxes(mesh, spec.splits);
  const int g = spec.growth();

  Decomposition dec;
  dec.dim = dim;
  dec.n_global = dofmap.n_dofs;
  dec.spec = spec;
  dec.subdomains.resize(boxes.size());
  const grid::CellBox full = mesh.full_box();
  for (std::size_t s = 0; s < boxes.size(); ++s) {
    Subdomain& sd = dec.subdomains[s];
    sd.id = static_cast<int>(s);
    sd.cell_box = boxes[s];
    sd.local_box = grid::grow_box(mesh, boxes[s], g);
    for (int a = 0; a < dim; ++a) {
      sd.interior_face[2 * a] = sd.local_box.begin[a] > full.begin[a];
      sd.interior_face[2 * a + 1] = sd.local_box.end[a] < full.end[a];
    }
    sd.elements = grid::elements_within_layers(mesh, boxes[s], g);
    if (sd.elements.empty())
      throw InvalidInput("decompose: subdomain " + std::to_string(s) + " contains no elements");
    sd.dofs = fem::Patch::of_elements(dofmap, sd.elements).dofs;
  }
  build_partition_of_unity(dec, dofmap);
  if (!options.assemble) return dec;

  parallel_for(dec.n_sub(), [&](int begin, int end, int) {
    for (int s = begin; s < end; ++s) {
      Subdomain& sd = dec.subdomains[s];
      build_local_system(mesh, dofmap, spec, problem, sd);
      if (!options.factorize) continue;
      try {
        sd.lu = solver::factorize(sd.A);
      } catch (const solver::SingularMatrixError& e) {
        throw solver::SingularMatrixError(
            "subdomain " + std::to_string(s) + ": " + e.what(), e.pivot());
      }
      if (!options.keep_local_matrices) sd.A = SparseComplexMatrix();
    }
  });
  return dec;
}

void build_partition_of_unity(Decomposition& dec, const fe::DofMap& dofmap) {
  const int dim = dec.dim;
  const int p = dofmap.order;
  std::vector<int> owner(dofmap.n_dofs, -1);
  for (int d = 0; d < dofmap.n_dofs; ++d) {
    const auto& L = dofmap.dof_lattice[d];
    for (const auto& sd : dec.subdomains) {
      bool inside = true;
      for (int a = 0; a < dim && inside; ++a)
        inside = L[a] >= p * sd.cell_box.begin[a] && L[a] <= p * sd.cell_box.end[a];
      if (inside) {
        owner[d] = sd.id;
        break;
      }
    }
  }
  // The geometric owner must hold the DoF; otherwise fall back to the first holder.
  std::vector<int> first_holder(dofmap.n_dofs, -1);
  std::vector<char> held_by_owner(dofmap.n_dofs, 0);
  for (const auto& sd : dec.subdomains)
    for (int d : sd.dofs) {
      if (first_holder[d] < 0) first_holder[d] = sd.id;
      if (owner[d] == sd.id) held_by_owner[d] = 1;
    }
  for (int d = 0; d < dofmap.n_dofs; ++d) {
    if (first_holder[d] < 0) throw InternalError("partition of unity: DoF in no subdomain");
    if (!held_by_owner[d]) owner[d] = first_holder[d];
  }
  for (auto& sd : dec.subdomains) {
    sd.pou.assign(sd.dofs.size(), 0);
    for (std::size_t i = 0; i < sd.dofs.size(); ++i) sd.pou[i] = owner[sd.dofs[i]] == sd.id;
  }
}

ComplexVector apply_partition_identity(const Decomposition& dec, std::span<const Complex> v) {
  ComplexVector out(dec.n_global, Complex{0.0, 0.0});
  for (const auto& sd : dec.subdomains)
    for (std::size_t i = 0; i < sd.dofs.size(); ++i)
      out[sd.dofs[i]] += static_cast<double>(sd.pou[i]) * v[sd.dofs[i]];
  return out;
}

void apply_oras(const Decomposition& dec, std::span<const Complex> r, std::span<Complex> out) {
  if (r.size() != static_cast<std::size_t>(dec.n_global) || out.size() != r.size())
    throw InvalidInput("apply_oras: dimension mismatch");
  for (const auto& sd : dec.subdomains)
    if (!sd.lu) throw InvalidInput("apply_oras: subdomain " + std::to_string(sd.id) + " not factorized");
  std::fill(out.begin(), out.end(), Complex{0.0, 0.0});
  // Owned entries are disjoint across subdomains, so the writes never collide.
  parallel_for(dec.n_sub(), [&](int begin, int end, int) {
    ComplexVector rs, xs;
    for (int s = begin; s < end; ++s) {
      const Subdomain& sd = dec.subdomains[s];
      rs.resize(sd.dofs.size());
      xs.resize(sd.dofs.size());
      for (std::size_t i = 0; i < sd.dofs.size(); ++i) rs[i] = r[sd.dofs[i]];
      sd.lu->solve(rs, xs);
      for (std::size_t i = 0; i < sd.dofs.size(); ++i)
        if (sd.pou[i]) out[sd.dofs[i]] = xs[i];
    }
  });
}

ComplexVector apply_oras(const Decomposition& dec, std::span<const Complex> r) {
  ComplexVector out(r.size());
  apply_oras(dec, r, out);
  return out;
}

solver::LinearOperator as_operator(const Decomposition& dec) {
  return [&dec](std::span<const Complex> x, std::span<Complex> y) { apply_oras(dec, x, y); };
}

GlobalSolve solve_with_oras(const fem::Discretization& disc, const DecompositionSpec& spec,
                            const solver::GmresConfig& gmres, bool release_local_matrices) {
  GlobalSolve out;
  out.warnings = spec.warnings();
  const auto t0 = std::chrono::steady_clock::now();
  DecomposeOptions options;
  options.keep_local_matrices = !release_local_matrices;
  const Decomposition dec = decompose(disc.mesh, disc.dofmap, spec, disc.problem, options);
  out.setup_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  auto result = solver::gmres_right(solver::as_operator(disc.system.A), as_operator(dec),
                                    disc.system.b, gmres);
  out.solution = std::move(result.solution);
  out.report = std::move(result.report);
  return out;
}

}  // namespace helmdd::dd
