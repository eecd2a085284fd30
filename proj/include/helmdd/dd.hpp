#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "helmdd/fem.hpp"
#include "helmdd/solver.hpp"

namespace helmdd::dd {

/// How the overlap value maps to cell layers added on each interior side.
/// PerSide: overlap layers per side. SharedTotal: overlap counts the layers
/// shared by two neighbours, so each side grows by ceil(overlap / 2).
enum class OverlapConvention { PerSide, SharedTotal };

enum class InterfaceKind { Impedance, Pml };

struct InterfaceCondition {
  InterfaceKind kind = InterfaceKind::Pml;
  int layers = 1;  // Pml only
  pml::StretchFunction stretch;
};

struct DecompositionSpec {
  grid::Index3 splits{1, 1, 1};
  int overlap = 2;
  OverlapConvention convention = OverlapConvention::PerSide;
  InterfaceCondition interface;

  /// Cell layers added on each interior side.
  int growth() const;
  void validate(int dim) const;
  /// Non-fatal configuration hazards (interface layer not inside the overlap).
  std::vector<std::string> warnings() const;
};

std::string to_string(OverlapConvention c);
OverlapConvention parse_overlap_convention(const std::string& name);
std::string to_string(InterfaceKind k);
InterfaceKind parse_interface_kind(const std::string& name);

struct Subdomain {
  int id = 0;
  grid::CellBox cell_box;   // before overlap
  grid::CellBox local_box;  // after overlap
  std::array<bool, 6> interior_face{};
  std::vector<int> elements;
  std::vector<int> dofs;  // R_s: local -> global, ascending
  std::vector<std::uint8_t> pou;  // diagonal of D_s, 0 or 1
  std::vector<int> interface_pml_elements;  // elements with interface stretching
  SparseComplexMatrix A;  // empty when released
  std::unique_ptr<solver::SparseLU> lu;

  int size() const { return static_cast<int>(dofs.size()); }
};

struct Decomposition {
  int dim = 2;
  int n_global = 0;
  DecompositionSpec spec;
  std::vector<Subdomain> subdomains;

  int n_sub() const { return static_cast<int>(subdomains.size()); }
};

struct DecomposeOptions {
  bool factorize = true;
  bool keep_local_matrices = true;
  bool assemble = true;  // false: index sets and weights only
};

/// Boundaries 0 = b_0 < ... < b_parts = n of a near-equal split of n cells;
/// remainders go to the low end.
std::vector<int> split_axis(int n, int parts);

/// Pre-overlap cell boxes in subdomain order (x fastest).
std::vector<grid::CellBox> split_boxes(const grid::StructuredMesh& mesh, const grid::Index3& splits);

/// Throws InvalidInput when `spec` cannot split a lattice of `cells`: more
/// subdomains than cells on an axis, or overlap covering a whole neighbour.
void check_decomposition(const grid::Index3& cells, int dim, const DecompositionSpec& spec);

/// Builds subdomains, local operators and (optionally) their factorizations.
/// Throws InvalidInput when a subdomain's overlap covers a whole neighbour.
Decomposition decompose(const grid::StructuredMesh& mesh, const fe::DofMap& dofmap,
                        const DecompositionSpec& spec, const fem::ProblemSpec& problem,
                        const DecomposeOptions& options = {});

/// Boolean ownership weights for the given dof sets: each DoF goes to the
/// lowest-id subdomain whose closed pre-overlap box contains its lattice
/// point, falling back to the lowest-id subdomain that holds it.
void build_partition_of_unity(Decomposition& dec, const fe::DofMap& dofmap);

/// sum_s R_s^T D_s v restricted back, i.e. the partition identity applied to v.
ComplexVector apply_partition_identity(const Decomposition& dec, std::span<const Complex> v);

/// sum_s R_s^T D_s A_s^{-1} R_s r
void apply_oras(const Decomposition& dec, std::span<const Complex> r, std::span<Complex> out);
ComplexVector apply_oras(const Decomposition& dec, std::span<const Complex> r);

solver::LinearOperator as_operator(const Decomposition& dec);

struct GlobalSolve {
  ComplexVector solution;
  solver::SolveReport report;
  double setup_time = 0.0;  // decomposition and factorization, seconds
  std::vector<std::string> warnings;
};

/// Solves the assembled global system with ORAS-preconditioned GMRES.
GlobalSolve solve_with_oras(const fem::Discretization& disc, const DecompositionSpec& spec,
                            const solver::GmresConfig& gmres, bool release_local_matrices = true);

}  // namespace helmdd::dd
