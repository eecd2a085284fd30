#pragma once

#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "helmdd/dofmap.hpp"
#include "helmdd/grid.hpp"
#include "helmdd/pml.hpp"
#include "helmdd/sparse.hpp"

namespace helmdd::fem {

using fe::DofMap;

/// g(x) = exp(-30 k |x - center|^2)
struct GaussianPoint {
  Point center{};
};

/// Plane wave exp(i k d.x) hitting the sound-soft hole; the scattered field is
/// solved for.
struct PlaneWaveScattering {
  Point direction{1.0, 0.0, 0.0};
};

using Source = std::variant<GaussianPoint, PlaneWaveScattering>;

struct ImpedanceBoundary {};

/// Global layer; lengths in metres per box face.
struct PmlBoundary {
  pml::StretchFunction stretch;
  std::array<double, 6> lengths{0.0, 0.0, 0.0, 0.0, 0.0, 0.0};

  static PmlBoundary uniform(pml::StretchFunction stretch, double length, int dim);
};

using GlobalBoundary = std::variant<ImpedanceBoundary, PmlBoundary>;

struct ProblemSpec {
  double frequency = 1.0;   // Hz
  double wave_speed = 1.0;  // m/s
  grid::BoxDomain domain = grid::BoxDomain::square(0.0, 10.0);  // physical box
  Source source = GaussianPoint{{5.0, 5.0, 0.0}};
  GlobalBoundary global_bc = ImpedanceBoundary{};
  double n_lambda = 10.0;  // points per wavelength
  int order = 2;
  bool curved_hole = true;  // exact circle on hole-adjacent elements

  double wavenumber() const { return 2.0 * kPi * frequency / wave_speed; }
  double wavelength() const { return wave_speed / frequency; }
  double omega() const { return 2.0 * kPi * frequency; }
  double mesh_size() const { return wavelength() / n_lambda; }

  bool has_pml() const { return std::holds_alternative<PmlBoundary>(global_bc); }
  std::optional<pml::PmlSpec> pml_spec() const;
  /// Physical box grown by the global layer.
  grid::BoxDomain computational_domain() const;
  void validate() const;
};

using CoefficientField = std::function<pml::StretchCoefficients(const Point&)>;
using ScalarField = std::function<Complex(const Point&)>;
using WavenumberField = std::function<double(const Point&)>;

/// A set of elements with a local numbering of the DoFs they touch.
struct Patch {
  std::vector<int> elements;  // sorted
  std::vector<int> dofs;      // local -> global, ascending

  int size() const { return static_cast<int>(dofs.size()); }
  static Patch whole(const grid::StructuredMesh& mesh, const DofMap& dofmap);
  static Patch of_elements(const DofMap& dofmap, std::vector<int> elements);
};

struct RobinFacet {
  int element = -1;
  int local_facet = -1;
  int normal_axis = 0;
};

struct OperatorTerms {
  WavenumberField wavenumber;
  CoefficientField coefficients;  // empty: unstretched Laplacian
  std::vector<RobinFacet> robin;
  int quadrature_degree = 0;  // 0: 2 * order
};

/// Assembles sum_j D_j d_j u d_j v - k^2 J u v over the patch plus
/// i k (J / s_n) u v on the Robin facets, in the patch's local numbering.
SparseComplexMatrix assemble_operator(const grid::StructuredMesh& mesh, const DofMap& dofmap,
                                      const Patch& patch, const OperatorTerms& terms);

/// Load vector of J g v.
ComplexVector assemble_load(const grid::StructuredMesh& mesh, const DofMap& dofmap,
                            const Patch& patch, const ScalarField& source,
                            const CoefficientField& coefficients, int quadrature_degree = 0);

/// Row/column elimination of prescribed DoFs (local indices): identity rows
/// and columns, lifted values moved to b. Explicit zeros are pruned.
void apply_dirichlet(SparseComplexMatrix& A, ComplexVector& b, std::span<const int> dofs,
                     std::span<const Complex> values);

/// Global DoFs lying on the given element facets, sorted and unique.
std::vector<int> facet_dofs(const DofMap& dofmap,
                            std::span<const grid::BoundaryFacet> facets);

struct AssembledSystem {
  SparseComplexMatrix A;
  ComplexVector b;
  std::vector<int> dirichlet_dofs;   // local indices
  std::vector<int> local_to_global;  // local -> global DoF
  const DofMap* dofmap = nullptr;

  int size() const { return A.rows(); }
};

/// Load vector and Dirichlet data of the global problem.
struct RhsData {
  ComplexVector load;
  std::vector<int> dirichlet_dofs;
  ComplexVector dirichlet_values;
};

RhsData make_rhs(const ProblemSpec& problem, const grid::StructuredMesh& mesh,
                 const DofMap& dofmap);

/// Stretching of the global layer, or an empty field without one.
CoefficientField global_coefficients(const ProblemSpec& problem);

/// Box faces carrying the impedance condition: all faces under an impedance
/// boundary, and faces with zero layer length under a PML boundary.
bool face_is_impedance(const ProblemSpec& problem, int face);

AssembledSystem assemble(const grid::StructuredMesh& mesh, const DofMap& dofmap,
                         const ProblemSpec& problem, const CoefficientField& coefficients);

/// (int |u_h - u_ref|^2)^(1/2) / (int |u_ref|^2)^(1/2); with `physical_only`
/// the integrals skip elements whose centroid lies outside `physical`.
double l2_relative_error(std::span<const Complex> u_h, const ScalarField& reference,
                         const grid::StructuredMesh& mesh, const DofMap& dofmap,
                         bool physical_only, const grid::BoxDomain& physical,
                         int quadrature_degree = 0);

/// Mesh, DoF map and assembled system of a problem on its computational box.
struct Discretization {
  ProblemSpec problem;
  grid::StructuredMesh mesh;
  DofMap dofmap;
  AssembledSystem system;
};

Discretization discretize(const ProblemSpec& problem);

/// Point evaluation of a finite element function on a structured mesh.
class FieldEvaluator {
 public:
  FieldEvaluator(const grid::StructuredMesh& mesh, const DofMap& dofmap, ComplexVector values);

  Complex operator()(const Point& x) const;
  const ComplexVector& values() const { return values_; }

 private:
  const grid::StructuredMesh* mesh_;
  const DofMap* dofmap_;
  ComplexVector values_;
};

/// Barycentric coordinates of x in element e.
fe::Bary barycentric(const grid::StructuredMesh& mesh, int e, const Point& x);

}  // namespace helmdd::fem
