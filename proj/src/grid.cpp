#include "helmdd/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <tuple>

namespace helmdd::grid {

bool BoxDomain::contains(const Point& x, double tol) const {
  for (int a = 0; a < dim; ++a)
    if (x[a] < lower[a] - tol || x[a] > upper[a] + tol) return false;
  return true;
}

void BoxDomain::validate() const {
  if (dim != 2 && dim != 3) throw InvalidInput("BoxDomain: dim must be 2 or 3");
  for (int a = 0; a < dim; ++a)
    if (!(upper[a] > lower[a])) throw InvalidInput("BoxDomain: upper must exceed lower");
  if (hole) {
    if (dim != 2) throw InvalidInput("BoxDomain: holes are supported in 2D only");
    if (!(hole->radius > 0.0)) throw InvalidInput("BoxDomain: hole radius must be positive");
    for (int a = 0; a < 2; ++a) {
      if (hole->center[a] - hole->radius <= lower[a] || hole->center[a] + hole->radius >= upper[a])
        throw InvalidInput("BoxDomain: hole must lie strictly inside the box");
    }
  }
}

BoxDomain BoxDomain::square(double lo, double hi) {
  BoxDomain d;
  d.dim = 2;
  d.lower = {lo, lo, 0.0};
  d.upper = {hi, hi, 0.0};
  return d;
}

BoxDomain BoxDomain::cube(double lo, double hi) {
  BoxDomain d;
  d.dim = 3;
  d.lower = {lo, lo, lo};
  d.upper = {hi, hi, hi};
  return d;
}

int StructuredMesh::n_cells() const {
  int n = 1;
  for (int a = 0; a < dim(); ++a) n *= cells[a];
  return n;
}

int StructuredMesh::layer_index(int e, int face) const {
  const int axis = face_axis(face);
  const int c = element_cell[e][axis];
  return face_side(face) == 0 ? c : cells[axis] - 1 - c;
}

double StructuredMesh::signed_volume(int e) const {
  const auto& el = elements[e];
  const Point& p0 = vertices[el[0]];
  if (dim() == 2) {
    const double ax = vertices[el[1]][0] - p0[0], ay = vertices[el[1]][1] - p0[1];
    const double bx = vertices[el[2]][0] - p0[0], by = vertices[el[2]][1] - p0[1];
    return 0.5 * (ax * by - ay * bx);
  }
  std::array<std::array<double, 3>, 3> m{};
  for (int i = 0; i < 3; ++i)
    for (int a = 0; a < 3; ++a) m[i][a] = vertices[el[i + 1]][a] - p0[a];
  const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  return det / 6.0;
}

CellBox StructuredMesh::full_box() const {
  CellBox b;
  for (int a = 0; a < dim(); ++a) {
    b.begin[a] = 0;
    b.end[a] = cells[a];
  }
  return b;
}

Index3 StructuredMesh::locate_cell(const Point& x) const {
  Index3 c{0, 0, 0};
  for (int a = 0; a < dim(); ++a) {
    const int i = static_cast<int>(std::floor((x[a] - domain.lower[a]) / spacing[a]));
    c[a] = std::clamp(i, 0, cells[a] - 1);
  }
  return c;
}

namespace {

struct FacetKey {
  std::array<int, 3> v;
  int element;
  int local_facet;
};

void build_adjacency(StructuredMesh& mesh) {
  const int nv = mesh.vertices_per_element();
  const int ne = mesh.n_elements();
  std::vector<FacetKey> keys;
  keys.reserve(static_cast<std::size_t>(ne) * nv);
  for (int e = 0; e < ne; ++e) {
    for (int f = 0; f < nv; ++f) {
      FacetKey k{{-1, -1, -1}, e, f};
      int n = 0;
      for (int i = 0; i < nv; ++i)
        if (i != f) k.v[n++] = mesh.elements[e][i];
      std::sort(k.v.begin(), k.v.begin() + n);
      keys.push_back(k);
    }
  }
  std::sort(keys.begin(), keys.end(), [](const FacetKey& a, const FacetKey& b) {
    return std::tie(a.v, a.element, a.local_facet) < std::tie(b.v, b.element, b.local_facet);
  });

  mesh.facet_neighbor.assign(ne, {-1, -1, -1, -1});
  mesh.boundary_facets.clear();
  const int dim = mesh.dim();
  for (std::size_t i = 0; i < keys.size();) {
    std::size_t j = i + 1;
    while (j < keys.size() && keys[j].v == keys[i].v) ++j;
    if (j - i == 2) {
      mesh.facet_neighbor[keys[i].element][keys[i].local_facet] = keys[i + 1].element;
      mesh.facet_neighbor[keys[i + 1].element][keys[i + 1].local_facet] = keys[i].element;
    } else if (j - i == 1) {
      // Box face if every facet vertex sits on the same extreme lattice plane.
      int label = kHoleLabel;
      for (int a = 0; a < dim && label == kHoleLabel; ++a) {
        for (int side = 0; side < 2; ++side) {
          const int plane = side == 0 ? 0 : mesh.cells[a];
          bool on = true;
          for (int q = 0; q < dim; ++q)
            if (mesh.vertex_lattice[keys[i].v[q]][a] != plane) on = false;
          if (on) {
            label = 2 * a + side;
            break;
          }
        }
      }
      mesh.boundary_facets.push_back({keys[i].element, keys[i].local_facet, label});
    } else {
      throw InternalError("build_mesh: facet shared by more than two elements");
    }
    i = j;
  }
  std::sort(mesh.boundary_facets.begin(), mesh.boundary_facets.end(),
            [](const BoundaryFacet& a, const BoundaryFacet& b) {
              return std::tie(a.element, a.local_facet) < std::tie(b.element, b.local_facet);
            });
  mesh.curved_facet.clear();
  if (mesh.domain.hole) {
    mesh.curved_facet.assign(ne, -1);
    for (const auto& f : mesh.boundary_facets)
      if (f.label == kHoleLabel) {
        if (mesh.curved_facet[f.element] >= 0)
          throw InternalError("build_mesh: element with two facets on the hole");
        mesh.curved_facet[f.element] = static_cast<std::int8_t>(f.local_facet);
      }
  }
}

void build_cell_index(StructuredMesh& mesh) {
  const int nc = mesh.n_cells();
  mesh.cell_offsets.assign(nc + 1, 0);
  for (const auto& c : mesh.element_cell) ++mesh.cell_offsets[mesh.linear_cell(c) + 1];
  std::partial_sum(mesh.cell_offsets.begin(), mesh.cell_offsets.end(), mesh.cell_offsets.begin());
  mesh.cell_elements.assign(mesh.elements.size(), 0);
  std::vector<int> fill(mesh.cell_offsets.begin(), mesh.cell_offsets.end() - 1);
  for (int e = 0; e < mesh.n_elements(); ++e)
    mesh.cell_elements[fill[mesh.linear_cell(mesh.element_cell[e])]++] = e;
}

// Kuhn path simplices of the unit cell: vertex offsets along each permutation.
std::vector<std::array<Index3, 4>> kuhn_simplices(int dim) {
  std::vector<std::array<Index3, 4>> out;
  std::array<int, 3> perm{0, 1, 2};
  do {
    if (dim == 2 && perm[2] != 2) continue;
    std::array<Index3, 4> s{};
    Index3 cur{0, 0, 0};
    s[0] = cur;
    for (int i = 0; i < dim; ++i) {
      cur[perm[i]] += 1;
      s[i + 1] = cur;
    }
    out.push_back(s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

}  // namespace

Index3 cell_counts(const BoxDomain& domain, double h) {
  Index3 c{1, 1, 1};
  for (int a = 0; a < domain.dim; ++a)
    c[a] = std::max(1, static_cast<int>(std::lround(domain.extent(a) / h)));
  return c;
}

void check_mesh_parameters(const BoxDomain& domain, double h) {
  domain.validate();
  if (!(h > 0.0)) throw InvalidInput("build_mesh: h must be positive");
  double min_extent = domain.extent(0);
  for (int a = 1; a < domain.dim; ++a) min_extent = std::min(min_extent, domain.extent(a));
  if (!(h < min_extent)) throw InvalidInput("build_mesh: h must be below the smallest box extent");
  if (!domain.hole) return;
  const Index3 cells = cell_counts(domain, h);
  double min_spacing = 1e300;
  for (int a = 0; a < 2; ++a) {
    const double spacing = domain.extent(a) / cells[a];
    min_spacing = std::min(min_spacing, spacing);
    const double gap = std::min(domain.hole->center[a] - domain.hole->radius - domain.lower[a],
                                domain.upper[a] - domain.hole->center[a] - domain.hole->radius);
    if (gap < 2.0 * spacing)
      throw InvalidInput("build_mesh: hole must stay at least two cells away from the box");
  }
  if (2.0 * domain.hole->radius < 8.0 * min_spacing)
    throw InvalidInput("build_mesh: h too large to resolve the hole (need 8 cells across)");
}

StructuredMesh build_mesh(const BoxDomain& domain, double h, bool curved_hole) {
  check_mesh_parameters(domain, h);
  StructuredMesh mesh;
  mesh.domain = domain;
  mesh.h = h;
  const int dim = domain.dim;
  mesh.cells = cell_counts(domain, h);
  for (int a = 0; a < 3; ++a) mesh.spacing[a] = a < dim ? domain.extent(a) / mesh.cells[a] : 0.0;

  const Index3 np{mesh.cells[0] + 1, dim >= 2 ? mesh.cells[1] + 1 : 1,
                  dim == 3 ? mesh.cells[2] + 1 : 1};
  auto lattice_id = [&](const Index3& q) { return q[0] + np[0] * (q[1] + np[1] * q[2]); };

  std::vector<Point> verts;
  std::vector<Index3> vlat;
  verts.reserve(static_cast<std::size_t>(np[0]) * np[1] * np[2]);
  for (int k = 0; k < np[2]; ++k)
    for (int j = 0; j < np[1]; ++j)
      for (int i = 0; i < np[0]; ++i) {
        Point p{0.0, 0.0, 0.0};
        const Index3 q{i, j, k};
        for (int a = 0; a < dim; ++a) p[a] = mesh.lattice_coordinate(a, q[a]);
        verts.push_back(p);
        vlat.push_back(q);
      }

  auto inside_hole = [&](const Point& p) {
    if (!domain.hole) return false;
    const double dx = p[0] - domain.hole->center[0], dy = p[1] - domain.hole->center[1];
    return dx * dx + dy * dy < domain.hole->radius * domain.hole->radius;
  };

  const auto simplices = kuhn_simplices(dim);
  std::vector<std::array<int, 4>> elems;
  std::vector<Index3> ecell;
  std::vector<char> touches_removed(verts.size(), 0);
  for (int k = 0; k < mesh.cells[2]; ++k)
    for (int j = 0; j < mesh.cells[1]; ++j)
      for (int i = 0; i < mesh.cells[0]; ++i) {
        const Index3 c{i, j, k};
        if (domain.hole) {
          bool removed = false;
          std::array<int, 4> corners{};
          for (int t = 0; t < 4; ++t) {
            const Index3 q{i + (t & 1), j + ((t >> 1) & 1), 0};
            corners[t] = lattice_id(q);
            if (inside_hole(verts[corners[t]])) removed = true;
          }
          if (removed) {
            for (int v : corners) touches_removed[v] = 1;
            continue;
          }
        }
        for (const auto& s : simplices) {
          std::array<int, 4> el{-1, -1, -1, -1};
          for (int v = 0; v <= dim; ++v) {
            Index3 q = c;
            for (int a = 0; a < dim; ++a) q[a] += s[v][a];
            el[v] = lattice_id(q);
          }
          elems.push_back(el);
          ecell.push_back(c);
        }
      }

  if (domain.hole) {
    // Drop triangles whose three vertices all lie on the cut boundary; after
    // projection they would collapse onto the circle.
    std::vector<std::array<int, 4>> kept;
    std::vector<Index3> kept_cell;
    for (std::size_t e = 0; e < elems.size(); ++e) {
      const auto& el = elems[e];
      if (touches_removed[el[0]] && touches_removed[el[1]] && touches_removed[el[2]]) continue;
      kept.push_back(el);
      kept_cell.push_back(ecell[e]);
    }
    elems = std::move(kept);
    ecell = std::move(kept_cell);
    const Circle& hole = *domain.hole;
    for (std::size_t v = 0; v < verts.size(); ++v) {
      if (!touches_removed[v]) continue;
      const double dx = verts[v][0] - hole.center[0], dy = verts[v][1] - hole.center[1];
      const double r = std::hypot(dx, dy);
      verts[v][0] = hole.center[0] + hole.radius * dx / r;
      verts[v][1] = hole.center[1] + hole.radius * dy / r;
    }
  }

  // Compact vertex numbering to the vertices actually used.
  std::vector<int> remap(verts.size(), -1);
  for (const auto& el : elems)
    for (int v = 0; v <= dim; ++v) remap[el[v]] = 0;
  int next = 0;
  for (std::size_t v = 0; v < verts.size(); ++v) {
    if (remap[v] < 0) continue;
    remap[v] = next++;
    mesh.vertices.push_back(verts[v]);
    mesh.vertex_lattice.push_back(vlat[v]);
  }
  for (auto& el : elems)
    for (int v = 0; v <= dim; ++v) el[v] = remap[el[v]];
  mesh.elements = std::move(elems);
  mesh.element_cell = std::move(ecell);

  for (int e = 0; e < mesh.n_elements(); ++e) {
    double vol = mesh.signed_volume(e);
    if (vol < 0.0) {
      std::swap(mesh.elements[e][dim - 1], mesh.elements[e][dim]);
      vol = -vol;
    }
    if (!(vol > 1e-12 * std::pow(h, dim)))
      throw InternalError("build_mesh: degenerate element produced");
  }

  build_adjacency(mesh);
  build_cell_index(mesh);
  if (!curved_hole) mesh.curved_facet.clear();
  return mesh;
}

Point element_map(const StructuredMesh& mesh, int e, const std::array<double, 4>& lam,
                  std::array<Point, 4>* dx_dlam) {
  const int dim = mesh.dim();
  const auto& el = mesh.elements[e];
  const int f = mesh.curved_facet.empty() ? -1 : mesh.curved_facet[e];
  Point x{0.0, 0.0, 0.0};
  if (f < 0) {
    for (int i = 0; i <= dim; ++i)
      for (int a = 0; a < dim; ++a) x[a] += lam[i] * mesh.vertices[el[i]][a];
    if (dx_dlam)
      for (int i = 0; i <= dim; ++i) (*dx_dlam)[i] = mesh.vertices[el[i]];
    return x;
  }
  const int ia = (f + 1) % 3 < (f + 2) % 3 ? (f + 1) % 3 : (f + 2) % 3;
  const int ib = 3 - f - ia;
  const Circle& c = *mesh.domain.hole;
  const Point& vf = mesh.vertices[el[f]];
  const Point& va = mesh.vertices[el[ia]];
  const Point& vb = mesh.vertices[el[ib]];
  const double pa = std::atan2(va[1] - c.center[1], va[0] - c.center[0]);
  double dp = std::atan2(vb[1] - c.center[1], vb[0] - c.center[0]) - pa;
  if (dp > kPi) dp -= 2.0 * kPi;
  if (dp < -kPi) dp += 2.0 * kPi;
  const double s = lam[ia] + lam[ib];
  const double t = s > 0.0 ? lam[ib] / s : 0.0;
  const double phi = pa + t * dp;
  const Point g{c.center[0] + c.radius * std::cos(phi), c.center[1] + c.radius * std::sin(phi), 0.0};
  const Point dg{-c.radius * std::sin(phi) * dp, c.radius * std::cos(phi) * dp, 0.0};
  for (int a = 0; a < 2; ++a) x[a] = lam[f] * vf[a] + s * g[a];
  if (dx_dlam) {
    (*dx_dlam)[f] = vf;
    for (int a = 0; a < 2; ++a) {
      (*dx_dlam)[ia][a] = g[a] - t * dg[a];
      (*dx_dlam)[ib][a] = g[a] + (1.0 - t) * dg[a];
    }
    (*dx_dlam)[ia][2] = (*dx_dlam)[ib][2] = 0.0;
  }
  return x;
}

CellBox grow_box(const StructuredMesh& mesh, const CellBox& box, int n_layers) {
  CellBox g = box;
  for (int a = 0; a < mesh.dim(); ++a) {
    g.begin[a] = std::max(0, box.begin[a] - n_layers);
    g.end[a] = std::min(mesh.cells[a], box.end[a] + n_layers);
  }
  return g;
}

std::vector<int> elements_within_layers(const StructuredMesh& mesh, const CellBox& box,
                                        int n_layers) {
  if (n_layers < 0) throw InvalidInput("elements_within_layers: n_layers must be >= 0");
  const CellBox g = grow_box(mesh, box, n_layers);
  std::vector<int> out;
  Index3 c{0, 0, 0};
  const int kend = mesh.dim() == 3 ? g.end[2] : 1;
  const int kbeg = mesh.dim() == 3 ? g.begin[2] : 0;
  for (c[2] = kbeg; c[2] < kend; ++c[2])
    for (c[1] = g.begin[1]; c[1] < g.end[1]; ++c[1])
      for (c[0] = g.begin[0]; c[0] < g.end[0]; ++c[0]) {
        const int lc = mesh.linear_cell(c);
        for (int i = mesh.cell_offsets[lc]; i < mesh.cell_offsets[lc + 1]; ++i)
          out.push_back(mesh.cell_elements[i]);
      }
  std::sort(out.begin(), out.end());
  return out;
}

void write_mesh(const StructuredMesh& mesh, std::ostream& out) {
  const int dim = mesh.dim();
  out << "helmdd-mesh 1\n";
  out << "dim " << dim << "\n";
  out << "vertices " << mesh.n_vertices() << "\n";
  out.precision(17);
  for (const auto& p : mesh.vertices) {
    for (int a = 0; a < dim; ++a) out << (a ? " " : "") << p[a];
    out << "\n";
  }
  out << "elements " << mesh.n_elements() << "\n";
  for (int e = 0; e < mesh.n_elements(); ++e) {
    for (int v = 0; v <= dim; ++v) out << mesh.elements[e][v] << " ";
    for (int a = 0; a < dim; ++a) out << (a ? " " : "") << mesh.element_cell[e][a];
    out << "\n";
  }
  out << "boundary " << mesh.boundary_facets.size() << "\n";
  for (const auto& f : mesh.boundary_facets)
    out << f.element << " " << f.local_facet << " " << f.label << "\n";
}

}  // namespace helmdd::grid
