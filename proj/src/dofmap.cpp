#include "helmdd/dofmap.hpp"

#include <string>

namespace helmdd::fe {

DofMap build_dofmap(const grid::StructuredMesh& mesh, int order) {
  const int dim = mesh.dim();
  const int max_order = dim == 2 ? 3 : 2;
  if (order < 1 || order > max_order)
    throw InvalidInput("build_dofmap: unsupported order " + std::to_string(order) + " in " +
                       std::to_string(dim) + "D");

  DofMap dm;
  dm.dim = dim;
  dm.order = order;
  dm.element = LagrangeSimplex(dim, order);
  dm.nodes_per_element = dm.element.size();

  const grid::Index3 np{order * mesh.cells[0] + 1, order * mesh.cells[1] + 1,
                        dim == 3 ? order * mesh.cells[2] + 1 : 1};
  const std::int64_t lattice_size = static_cast<std::int64_t>(np[0]) * np[1] * np[2];
  auto key_of = [&](const grid::Index3& q) {
    return q[0] + static_cast<std::int64_t>(np[0]) * (q[1] + static_cast<std::int64_t>(np[1]) * q[2]);
  };

  const int ne = mesh.n_elements();
  const int npe = dm.nodes_per_element;
  std::vector<std::int64_t> node_keys(static_cast<std::size_t>(ne) * npe);
  std::vector<int> numbering(lattice_size, -1);
  for (int e = 0; e < ne; ++e) {
    const auto& el = mesh.elements[e];
    for (int a = 0; a < npe; ++a) {
      const auto& alpha = dm.element.node(a);
      grid::Index3 q{0, 0, 0};
      for (int i = 0; i <= dim; ++i)
        for (int ax = 0; ax < dim; ++ax) q[ax] += alpha[i] * mesh.vertex_lattice[el[i]][ax];
      const std::int64_t key = key_of(q);
      node_keys[static_cast<std::size_t>(e) * npe + a] = key;
      numbering[key] = 0;
    }
  }
  int n = 0;
  for (auto& v : numbering)
    if (v == 0) v = n++;
  dm.n_dofs = n;
  dm.dof_coords.assign(n, Point{0.0, 0.0, 0.0});
  dm.dof_lattice.assign(n, grid::Index3{0, 0, 0});
  dm.dof_face_flags.assign(n, 0);
  dm.element_dofs.resize(node_keys.size());

  for (int e = 0; e < ne; ++e) {
    for (int a = 0; a < npe; ++a) {
      const std::int64_t key = node_keys[static_cast<std::size_t>(e) * npe + a];
      const int d = numbering[key];
      dm.element_dofs[static_cast<std::size_t>(e) * npe + a] = d;
      const auto& alpha = dm.element.node(a);
      std::array<double, 4> lam{0.0, 0.0, 0.0, 0.0};
      for (int i = 0; i <= dim; ++i) lam[i] = static_cast<double>(alpha[i]) / order;
      dm.dof_coords[d] = grid::element_map(mesh, e, lam);
      grid::Index3 q{0, 0, 0};
      q[0] = static_cast<int>(key % np[0]);
      q[1] = static_cast<int>((key / np[0]) % np[1]);
      q[2] = static_cast<int>(key / (static_cast<std::int64_t>(np[0]) * np[1]));
      dm.dof_lattice[d] = q;
    }
  }

  for (const auto& f : mesh.boundary_facets) {
    const auto dofs = dm.dofs(f.element);
    for (int a : dm.element.facet_nodes(f.local_facet))
      dm.dof_face_flags[dofs[a]] |= static_cast<std::uint8_t>(1U << f.label);
  }
  return dm;
}

}  // namespace helmdd::fe
