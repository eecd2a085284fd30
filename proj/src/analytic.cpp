#include "helmdd/analytic.hpp"

#include <cmath>

#include "helmdd/bessel.hpp"
#include "helmdd/dd.hpp"
#include "helmdd/solver.hpp"

namespace helmdd::analytic {

std::vector<Complex> hankel(int nmax, double x, TimeConvention convention) {
  const auto j = bessel::bessel_j(nmax, x);
  const auto y = bessel::bessel_y(nmax, x);
  const double sign = convention == TimeConvention::PlusIOmegaT ? -1.0 : 1.0;
  std::vector<Complex> h(nmax + 1);
  for (int n = 0; n <= nmax; ++n) h[n] = Complex{j[n], sign * y[n]};
  return h;
}

int CircleScatterer::minimum_truncation(double wavenumber, double radius) {
  return static_cast<int>(std::ceil(wavenumber * radius)) + 20;
}

CircleScatterer::CircleScatterer(grid::Circle circle, double wavenumber, int truncation,
                                 TimeConvention convention, Point direction)
    : circle_(circle), k_(wavenumber), convention_(convention) {
  if (!(circle.radius > 0.0)) throw InvalidInput("CircleScatterer: radius must be positive");
  if (!(wavenumber > 0.0)) throw InvalidInput("CircleScatterer: wavenumber must be positive");
  const int nmin = minimum_truncation(wavenumber, circle.radius);
  if (truncation != 0 && truncation < nmin)
    throw InvalidInput("CircleScatterer: truncation below ceil(kR) + 20");
  n_ = truncation == 0 ? nmin : truncation;
  if (std::hypot(direction[0], direction[1]) == 0.0)
    throw InvalidInput("CircleScatterer: zero incidence direction");
  theta0_ = std::atan2(direction[1], direction[0]);
  const double kr = k_ * circle.radius;
  const auto j = bessel::bessel_j(n_, kr);
  const auto h = hankel(n_, kr, convention_);
  coeff_.resize(n_ + 1);
  Complex in{1.0, 0.0};
  for (int n = 0; n <= n_; ++n) {
    coeff_[n] = (n == 0 ? 1.0 : 2.0) * in * j[n] / h[n];
    in *= kI;
  }
}

Complex CircleScatterer::scattered_field(const Point& x) const {
  const double r = std::hypot(x[0] - circle_.center[0], x[1] - circle_.center[1]);
  if (r < circle_.radius * (1.0 - 1e-12))
    throw InvalidInput("scattered_field: point inside the scatterer");
  return series(x, r);
}

Complex CircleScatterer::continued_field(const Point& x) const {
  const double r = std::hypot(x[0] - circle_.center[0], x[1] - circle_.center[1]);
  if (r < 0.5 * circle_.radius) throw InvalidInput("continued_field: point too deep inside");
  return series(x, r);
}

Complex CircleScatterer::series(const Point& x, double r) const {
  const double dx = x[0] - circle_.center[0], dy = x[1] - circle_.center[1];
  const double theta = std::atan2(dy, dx) - theta0_;
  const auto h = hankel(n_, k_ * r, convention_);
  Complex sum{0.0, 0.0};
  for (int n = n_; n >= 0; --n) sum += coeff_[n] * h[n] * std::cos(n * theta);
  // Phase of the incident wave at the centre.
  const double c0 = std::cos(theta0_) * circle_.center[0] + std::sin(theta0_) * circle_.center[1];
  return -std::exp(kI * k_ * c0) * sum;
}

Complex CircleScatterer::incident_field(const Point& x) const {
  return std::exp(kI * k_ * (std::cos(theta0_) * x[0] + std::sin(theta0_) * x[1]));
}

fem::ProblemSpec reference_problem(const fem::ProblemSpec& problem, double refinement,
                                   double min_pml_wavelengths) {
  if (!(refinement >= 2.0)) throw InvalidInput("reference oracle: refinement must be >= 2");
  fem::ProblemSpec ref = problem;
  ref.n_lambda = problem.n_lambda * refinement;
  const double min_len = min_pml_wavelengths * problem.wavelength();
  fem::PmlBoundary bc;
  if (const auto* p = std::get_if<fem::PmlBoundary>(&problem.global_bc)) bc = *p;
  bc.stretch = pml::StretchFunction{};
  for (int f = 0; f < 2 * problem.domain.dim; ++f) bc.lengths[f] = std::max(bc.lengths[f], min_len);
  ref.global_bc = bc;
  return ref;
}

ComplexVector solve_global(const fem::Discretization& disc, int direct_limit, double rel_tol) {
  const int n = disc.dofmap.n_dofs;
  if (n <= direct_limit) return solver::factorize(disc.system.A)->solve(disc.system.b);
  dd::DecompositionSpec spec;
  const int dim = disc.mesh.dim();
  const double per_sub = dim == 2 ? 40000.0 : 20000.0;
  const int s = std::max(2, static_cast<int>(std::ceil(std::pow(n / per_sub, 1.0 / dim))));
  for (int a = 0; a < dim; ++a) spec.splits[a] = std::min(s, disc.mesh.cells[a] / 8);
  spec.overlap = 4;
  spec.interface.layers = 2;
  if (disc.problem.domain.hole) spec.interface.kind = dd::InterfaceKind::Impedance;
  solver::GmresConfig cfg;
  cfg.rel_tol = rel_tol;
  cfg.restart = 40;
  cfg.max_iters = 4000;
  auto result = dd::solve_with_oras(disc, spec, cfg);
  if (!result.report.converged)
    throw std::runtime_error("solve_global: ORAS-GMRES did not converge");
  return std::move(result.solution);
}

ReferenceOracle::ReferenceOracle(const fem::ProblemSpec& problem, double refinement,
                                 double min_pml_wavelengths) {
  disc_ = std::make_shared<fem::Discretization>(
      fem::discretize(reference_problem(problem, refinement, min_pml_wavelengths)));
  ComplexVector u = solve_global(*disc_);
  evaluator_ = std::make_shared<fem::FieldEvaluator>(disc_->mesh, disc_->dofmap, std::move(u));
}

fem::ScalarField ReferenceOracle::as_field() const {
  auto disc = disc_;
  auto eval = evaluator_;
  return [disc, eval](const Point& x) { return (*eval)(x); };
}

}  // namespace helmdd::analytic
