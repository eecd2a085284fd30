#pragma once

#include <array>
#include <span>
#include <vector>

namespace helmdd::fe {

using Bary = std::array<double, 4>;

/// Quadrature on the reference simplex of dimension `dim` (1: interval,
/// 2: triangle, 3: tetrahedron). Points are barycentric (dim+1 entries);
/// weights sum to the reference volume 1, 1/2 or 1/6.
struct QuadratureRule {
  int dim = 0;
  std::vector<Bary> points;
  std::vector<double> weights;

  int size() const { return static_cast<int>(weights.size()); }
};

/// Gauss-Legendre nodes and weights on [0, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Collapsed-coordinate Gauss rule exact for polynomials of total degree
/// `degree`. All points are strictly interior.
QuadratureRule simplex_rule(int dim, int degree);

/// Lagrange element of arbitrary order on a simplex, with nodes at the
/// barycentric lattice points alpha/order, |alpha| = order.
class LagrangeSimplex {
 public:
  LagrangeSimplex() = default;
  LagrangeSimplex(int dim, int order);

  int dim() const { return dim_; }
  int order() const { return order_; }
  int size() const { return static_cast<int>(nodes_.size()); }
  const std::array<int, 4>& node(int a) const { return nodes_[a]; }

  /// Basis values and barycentric derivatives d(phi_a)/d(lambda_i).
  void evaluate(const Bary& lambda, std::span<double> values,
                std::span<std::array<double, 4>> dvalues) const;
  double value(int a, const Bary& lambda) const;

  /// Local nodes lying on the facet opposite vertex `facet`.
  const std::vector<int>& facet_nodes(int facet) const { return facet_nodes_[facet]; }

 private:
  int dim_ = 0;
  int order_ = 0;
  std::vector<std::array<int, 4>> nodes_;
  std::vector<std::vector<int>> facet_nodes_;
};

/// Basis functions tabulated at the points of a quadrature rule, either on the
/// element interior or on one facet.
struct Tabulation {
  QuadratureRule rule;  // barycentric coordinates of the element
  std::vector<double> weights;  // reference-measure weights
  std::vector<double> phi;   // [q * n + a]
  std::vector<std::array<double, 4>> dphi;  // [q * n + a]
  int n = 0;
};

Tabulation tabulate_volume(const LagrangeSimplex& fe, int degree);
/// Rule on the facet opposite vertex `facet`, embedded in element barycentrics;
/// weights sum to the reference facet volume.
Tabulation tabulate_facet(const LagrangeSimplex& fe, int facet, int degree);

}  // namespace helmdd::fe
