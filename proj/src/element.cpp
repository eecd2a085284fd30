#include "helmdd/element.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "helmdd/types.hpp"

namespace helmdd::fe {

namespace {
// Legendre P_n(x) and P_n'(x) by the three-term recurrence.
void legendre(int n, double x, double& pn, double& dpn) {
  double p0 = 1.0, p1 = x;
  if (n == 0) {
    pn = 1.0;
    dpn = 0.0;
    return;
  }
  for (int k = 2; k <= n; ++k) {
    const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = pk;
  }
  pn = p1;
  dpn = n * (x * p1 - p0) / (x * x - 1.0);
}
}  // namespace

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw InvalidInput("gauss_legendre: n must be >= 1");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pn = 0.0, dpn = 1.0;
    for (int it = 0; it < 100; ++it) {
      legendre(n, x, pn, dpn);
      const double dx = pn / dpn;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    legendre(n, x, pn, dpn);
    // [-1, 1] -> [0, 1], ascending
    nodes[n - 1 - i] = 0.5 * (x + 1.0);
    weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dpn * dpn);
  }
}

QuadratureRule simplex_rule(int dim, int degree) {
  if (dim < 1 || dim > 3) throw InvalidInput("simplex_rule: dim must be 1..3");
  degree = std::max(degree, 0);
  QuadratureRule rule;
  rule.dim = dim;
  auto npts = [](int deg) { return std::max(1, (deg + 2) / 2); };
  std::vector<double> xu, wu, xv, wv, xw, ww;
  if (dim == 1) {
    gauss_legendre(npts(degree), xu, wu);
    for (std::size_t i = 0; i < xu.size(); ++i) {
      rule.points.push_back({1.0 - xu[i], xu[i], 0.0, 0.0});
      rule.weights.push_back(wu[i]);
    }
  } else if (dim == 2) {
    gauss_legendre(npts(degree + 1), xu, wu);
    gauss_legendre(npts(degree), xv, wv);
    for (std::size_t i = 0; i < xu.size(); ++i)
      for (std::size_t j = 0; j < xv.size(); ++j) {
        const double l1 = xu[i];
        const double l2 = (1.0 - xu[i]) * xv[j];
        rule.points.push_back({1.0 - l1 - l2, l1, l2, 0.0});
        rule.weights.push_back(wu[i] * wv[j] * (1.0 - xu[i]));
      }
  } else {
    gauss_legendre(npts(degree + 2), xu, wu);
    gauss_legendre(npts(degree + 1), xv, wv);
    gauss_legendre(npts(degree), xw, ww);
    for (std::size_t i = 0; i < xu.size(); ++i)
      for (std::size_t j = 0; j < xv.size(); ++j)
        for (std::size_t k = 0; k < xw.size(); ++k) {
          const double u = xu[i], v = xv[j], w = xw[k];
          const double l1 = u;
          const double l2 = (1.0 - u) * v;
          const double l3 = (1.0 - u) * (1.0 - v) * w;
          rule.points.push_back({1.0 - l1 - l2 - l3, l1, l2, l3});
          rule.weights.push_back(wu[i] * wv[j] * ww[k] * (1.0 - u) * (1.0 - u) * (1.0 - v));
        }
  }
  return rule;
}

LagrangeSimplex::LagrangeSimplex(int dim, int order) : dim_(dim), order_(order) {
  if (dim < 1 || dim > 3) throw InvalidInput("LagrangeSimplex: dim must be 1..3");
  if (order < 1) throw InvalidInput("LagrangeSimplex: order must be >= 1");
  // Vertices first, then the remaining lattice points in lexicographic order.
  for (int v = 0; v <= dim; ++v) {
    std::array<int, 4> a{0, 0, 0, 0};
    a[v] = order;
    nodes_.push_back(a);
  }
  std::array<int, 4> a{0, 0, 0, 0};
  for (a[1] = 0; a[1] <= order; ++a[1])
    for (a[2] = 0; a[2] <= (dim >= 2 ? order - a[1] : 0); ++a[2])
      for (a[3] = 0; a[3] <= (dim == 3 ? order - a[1] - a[2] : 0); ++a[3]) {
        a[0] = order - a[1] - a[2] - a[3];
        int nonzero_max = 0;
        for (int i = 0; i <= dim; ++i) nonzero_max = std::max(nonzero_max, a[i]);
        if (nonzero_max == order) continue;  // vertex
        nodes_.push_back(a);
      }
  facet_nodes_.resize(dim + 1);
  for (int f = 0; f <= dim; ++f)
    for (int n = 0; n < size(); ++n)
      if (nodes_[n][f] == 0) facet_nodes_[f].push_back(n);
}

namespace {
// P_m(t) = prod_{j<m} (p t - j)/(j+1) and its derivative.
inline void lattice_poly(int m, int p, double t, double& val, double& der) {
  val = 1.0;
  der = 0.0;
  for (int j = 0; j < m; ++j) {
    const double f = (p * t - j) / (j + 1.0);
    const double df = p / (j + 1.0);
    der = der * f + val * df;
    val *= f;
  }
}
}  // namespace

void LagrangeSimplex::evaluate(const Bary& lambda, std::span<double> values,
                               std::span<std::array<double, 4>> dvalues) const {
  for (int n = 0; n < size(); ++n) {
    std::array<double, 4> v{}, d{};
    for (int i = 0; i <= dim_; ++i) lattice_poly(nodes_[n][i], order_, lambda[i], v[i], d[i]);
    double prod = 1.0;
    for (int i = 0; i <= dim_; ++i) prod *= v[i];
    values[n] = prod;
    if (!dvalues.empty()) {
      std::array<double, 4> g{0.0, 0.0, 0.0, 0.0};
      for (int i = 0; i <= dim_; ++i) {
        double others = d[i];
        for (int j = 0; j <= dim_; ++j)
          if (j != i) others *= v[j];
        g[i] = others;
      }
      dvalues[n] = g;
    }
  }
}

double LagrangeSimplex::value(int a, const Bary& lambda) const {
  double prod = 1.0;
  for (int i = 0; i <= dim_; ++i) {
    double v, d;
    lattice_poly(nodes_[a][i], order_, lambda[i], v, d);
    prod *= v;
  }
  return prod;
}

namespace {
Tabulation tabulate(const LagrangeSimplex& fe, QuadratureRule rule) {
  Tabulation t;
  t.n = fe.size();
  t.weights = rule.weights;
  const int nq = rule.size();
  t.phi.resize(static_cast<std::size_t>(nq) * t.n);
  t.dphi.resize(static_cast<std::size_t>(nq) * t.n);
  for (int q = 0; q < nq; ++q)
    fe.evaluate(rule.points[q], std::span(t.phi).subspan(q * t.n, t.n),
                std::span(t.dphi).subspan(q * t.n, t.n));
  t.rule = std::move(rule);
  return t;
}
}  // namespace

Tabulation tabulate_volume(const LagrangeSimplex& fe, int degree) {
  return tabulate(fe, simplex_rule(fe.dim(), degree));
}

Tabulation tabulate_facet(const LagrangeSimplex& fe, int facet, int degree) {
  const QuadratureRule facet_rule = simplex_rule(fe.dim() - 1, degree);
  QuadratureRule embedded;
  embedded.dim = fe.dim();
  embedded.weights = facet_rule.weights;
  for (const auto& mu : facet_rule.points) {
    Bary lam{0.0, 0.0, 0.0, 0.0};
    int k = 0;
    for (int i = 0; i <= fe.dim(); ++i) lam[i] = (i == facet) ? 0.0 : mu[k++];
    embedded.points.push_back(lam);
  }
  return tabulate(fe, std::move(embedded));
}

}  // namespace helmdd::fe
