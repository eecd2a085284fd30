#pragma once

#include <memory>

#include "helmdd/fem.hpp"

namespace helmdd::analytic {

/// Which Hankel function represents outgoing waves. The solver's impedance
/// condition du/dn + i k u = 0 and stretch 1 - i sigma / omega select
/// exp(-i k r) outgoing, i.e. the second kind.
enum class TimeConvention { PlusIOmegaT, MinusIOmegaT };

/// Sound-soft circle hit by exp(i k d.x); d = +x by default.
class CircleScatterer {
 public:
  CircleScatterer(grid::Circle circle, double wavenumber, int truncation = 0,
                  TimeConvention convention = TimeConvention::PlusIOmegaT,
                  Point direction = {1.0, 0.0, 0.0});

  double radius() const { return circle_.radius; }
  double wavenumber() const { return k_; }
  int truncation() const { return n_; }

  /// Scattered field at x; throws InvalidInput inside the circle.
  Complex scattered_field(const Point& x) const;
  /// Analytic continuation of the series to r >= R / 2, for quadrature points
  /// of straight-sided elements that cut slightly into the disc.
  Complex continued_field(const Point& x) const;
  Complex incident_field(const Point& x) const;
  Complex operator()(const Point& x) const { return scattered_field(x); }

  static int minimum_truncation(double wavenumber, double radius);

 private:
  grid::Circle circle_;
  double k_;
  int n_;
  TimeConvention convention_;
  double theta0_;  // incidence angle
  std::vector<Complex> coeff_;  // i^n J_n(kR) / H_n(kR), with the factor 2 for n >= 1

  Complex series(const Point& x, double r) const;
};

/// Hankel function values H_0..H_nmax at x of the kind matching `convention`.
std::vector<Complex> hankel(int nmax, double x, TimeConvention convention);

/// Numerical reference: the same problem on a mesh refined by `refinement`,
/// with a global PML of at least `min_pml_wavelengths` wavelengths.
class ReferenceOracle {
 public:
  ReferenceOracle(const fem::ProblemSpec& problem, double refinement,
                  double min_pml_wavelengths = 2.0);

  Complex operator()(const Point& x) const { return (*evaluator_)(x); }
  const fem::Discretization& discretization() const { return *disc_; }
  fem::ScalarField as_field() const;

 private:
  std::shared_ptr<fem::Discretization> disc_;
  std::shared_ptr<fem::FieldEvaluator> evaluator_;
};

/// Problem solved by ReferenceOracle for `problem`.
fem::ProblemSpec reference_problem(const fem::ProblemSpec& problem, double refinement,
                                   double min_pml_wavelengths = 2.0);

/// Solves a discretized global system: sparse LU up to `direct_limit` DoFs,
/// ORAS-GMRES beyond, with PML interface conditions (impedance ones when the
/// domain has a hole).
ComplexVector solve_global(const fem::Discretization& disc, int direct_limit = 400000,
                           double rel_tol = 1e-10);

}  // namespace helmdd::analytic
