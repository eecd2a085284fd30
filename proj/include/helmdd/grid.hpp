#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "helmdd/types.hpp"

namespace helmdd::grid {

/// Boundary labels. Box faces are 2*axis + side (side 0 = lower, 1 = upper);
/// the scatterer boundary gets its own label.
inline constexpr int kFaceXLow = 0;
inline constexpr int kFaceXHigh = 1;
inline constexpr int kFaceYLow = 2;
inline constexpr int kFaceYHigh = 3;
inline constexpr int kFaceZLow = 4;
inline constexpr int kFaceZHigh = 5;
inline constexpr int kHoleLabel = 6;
inline constexpr int kNumLabels = 7;

inline constexpr int face_axis(int face) { return face / 2; }
inline constexpr int face_side(int face) { return face % 2; }

struct Circle {
  Point center{};
  double radius = 0.0;
};

/// Axis-aligned box, optionally with a circular hole (2D only).
struct BoxDomain {
  int dim = 2;
  Point lower{};
  Point upper{};
  std::optional<Circle> hole;

  double extent(int axis) const { return upper[axis] - lower[axis]; }
  bool contains(const Point& x, double tol = 0.0) const;

  /// Throws InvalidInput if the invariants do not hold.
  void validate() const;

  static BoxDomain square(double lo, double hi);
  static BoxDomain cube(double lo, double hi);
};

using Index3 = std::array<int, 3>;

/// Half-open range of cells per axis: [begin[a], end[a]).
struct CellBox {
  Index3 begin{0, 0, 0};
  Index3 end{1, 1, 1};

  bool contains(const Index3& cell, int dim) const {
    for (int a = 0; a < dim; ++a)
      if (cell[a] < begin[a] || cell[a] >= end[a]) return false;
    return true;
  }
  bool operator==(const CellBox&) const = default;
};

struct BoundaryFacet {
  int element = -1;
  int local_facet = -1;  // facet opposite local vertex `local_facet`
  int label = -1;
};

/// Simplicial mesh of a rectilinear box built from a regular cell lattice.
/// Every element remembers the lattice cell it was cut from, so overlap and
/// interface-layer queries work in units of cell layers.
struct StructuredMesh {
  BoxDomain domain;
  double h = 0.0;              // requested mesh size
  Index3 cells{1, 1, 1};       // cells per axis
  Point spacing{1.0, 1.0, 1.0};  // actual cell size per axis

  std::vector<Point> vertices;
  std::vector<Index3> vertex_lattice;  // lattice coordinates before any projection
  std::vector<std::array<int, 4>> elements;  // dim+1 entries used
  std::vector<Index3> element_cell;
  std::vector<std::array<int, 4>> facet_neighbor;  // -1 on the boundary
  std::vector<BoundaryFacet> boundary_facets;
  // Per element: local facet lying on the hole (mapped exactly onto the
  // circle), or -1. Empty without a hole.
  std::vector<std::int8_t> curved_facet;

  // cell -> elements, CSR over linear cell index
  std::vector<int> cell_offsets;
  std::vector<int> cell_elements;

  int dim() const { return domain.dim; }
  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_elements() const { return static_cast<int>(elements.size()); }
  int n_cells() const;
  int vertices_per_element() const { return domain.dim + 1; }

  int linear_cell(const Index3& c) const {
    return c[0] + cells[0] * (c[1] + cells[1] * c[2]);
  }
  /// Distance in cell layers from element `e` to box face `face`.
  int layer_index(int e, int face) const;
  double signed_volume(int e) const;
  /// Physical coordinate of lattice plane `index` on `axis`.
  double lattice_coordinate(int axis, int index) const {
    return domain.lower[axis] + spacing[axis] * index;
  }
  CellBox full_box() const;
  /// Lattice cell that contains x (clamped to the grid).
  Index3 locate_cell(const Point& x) const;
};

/// Cells per axis used by build_mesh: round(extent / h), at least 1.
Index3 cell_counts(const BoxDomain& domain, double h);

/// Throws InvalidInput when build_mesh would reject (domain, h): h not below
/// the box extents, or a hole with fewer than 8 cells across or closer than
/// two cells to the box.
void check_mesh_parameters(const BoxDomain& domain, double h);

/// Builds the structured simplicial mesh. 2D cells split into 2 triangles,
/// 3D cells into 6 Kuhn tetrahedra. With a hole, cells with a vertex strictly
/// inside the disc are removed and the new boundary vertices are projected
/// radially onto the circle. With `curved_hole`, elements with a facet on the
/// circle follow it exactly (see element_map); otherwise they stay straight.
StructuredMesh build_mesh(const BoxDomain& domain, double h, bool curved_hole = true);

/// Maps barycentric coordinates of element `e` to physical space. Straight
/// elements are affine. An element with a facet on the hole uses the blending
/// x = l_f v_f + (1 - l_f) g(t), where g traces the arc between the facet's
/// end points and t = l_b / (l_a + l_b); its other edges stay straight.
/// With `dx_dlam`, also returns the partial derivatives with respect to each
/// barycentric coordinate taken as independent (homogeneous form).
Point element_map(const StructuredMesh& mesh, int e, const std::array<double, 4>& lam,
                  std::array<Point, 4>* dx_dlam = nullptr);

/// Elements whose cell lies within `n_layers` cell layers of `box`, sorted.
std::vector<int> elements_within_layers(const StructuredMesh& mesh, const CellBox& box,
                                        int n_layers);

/// Grows `box` by `n_layers` on every side and clips it to the lattice.
CellBox grow_box(const StructuredMesh& mesh, const CellBox& box, int n_layers);

/// Plain-text dump:
///   helmdd-mesh 1
///   dim <d>
///   vertices <n>      then n lines of d coordinates
///   elements <m>      then m lines: d+1 vertex ids, d cell indices
///   boundary <b>      then b lines: element local_facet label
void write_mesh(const StructuredMesh& mesh, std::ostream& out);

}  // namespace helmdd::grid
