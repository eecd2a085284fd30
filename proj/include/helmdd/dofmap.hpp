#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "helmdd/element.hpp"
#include "helmdd/grid.hpp"

namespace helmdd::fe {

/// Conforming Lagrange numbering. Nodes are keyed by their position on the
/// cell lattice refined `order` times, so entities shared between elements
/// receive the same global index by construction.
struct DofMap {
  int dim = 2;
  int order = 1;
  int n_dofs = 0;
  int nodes_per_element = 0;
  LagrangeSimplex element;
  std::vector<int> element_dofs;  // [e * nodes_per_element + a]
  std::vector<Point> dof_coords;
  std::vector<grid::Index3> dof_lattice;  // refined-lattice coordinates
  std::vector<std::uint8_t> dof_face_flags;  // bit `label` set when on that boundary

  std::span<const int> dofs(int e) const {
    return {element_dofs.data() + static_cast<std::size_t>(e) * nodes_per_element,
            static_cast<std::size_t>(nodes_per_element)};
  }
  bool on_boundary(int dof, int label) const { return (dof_face_flags[dof] >> label) & 1U; }
};

/// Supported orders: 1..3 in 2D, 1..2 in 3D.
DofMap build_dofmap(const grid::StructuredMesh& mesh, int order);

}  // namespace helmdd::fe
