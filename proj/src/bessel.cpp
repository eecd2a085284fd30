#include "helmdd/bessel.hpp"

#include <cmath>

#include "helmdd/types.hpp"

namespace helmdd::bessel {

namespace {
constexpr double kEulerGamma = 0.57721566490153286061;
}

std::vector<double> bessel_j(int nmax, double x) {
  if (nmax < 0) throw InvalidInput("bessel_j: nmax must be >= 0");
  if (!(x > 0.0)) throw InvalidInput("bessel_j: x must be positive");
  const int top = std::max(nmax, static_cast<int>(x)) + 30 +
                  static_cast<int>(std::sqrt(60.0 * std::max(nmax, static_cast<int>(x) + 1)));
  const int start = top + (top % 2);
  std::vector<double> j(start + 2, 0.0);
  j[start + 1] = 0.0;
  j[start] = 1e-300;
  for (int k = start; k >= 1; --k) {
    j[k - 1] = 2.0 * k / x * j[k] - j[k + 1];
    if (std::abs(j[k - 1]) > 1e250)
      for (int i = k - 1; i <= start; ++i) j[i] *= 1e-250;
  }
  double norm = j[0];
  for (int k = 2; k <= start; k += 2) norm += 2.0 * j[k];
  j.resize(nmax + 1);
  for (auto& v : j) v /= norm;
  return j;
}

std::vector<double> bessel_y(int nmax, double x) {
  if (nmax < 0) throw InvalidInput("bessel_y: nmax must be >= 0");
  const int terms = static_cast<int>(x) + 60;
  const std::vector<double> j = bessel_j(2 * terms + 2, x);
  const double lg = std::log(0.5 * x) + kEulerGamma;
  double s0 = 0.0, s1 = 0.0;
  for (int k = terms; k >= 1; --k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    s0 += sign * j[2 * k] / k;
    s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / k;
  }
  std::vector<double> y(std::max(nmax + 1, 2));
  y[0] = 2.0 / kPi * (lg * j[0] - 2.0 * s0);
  y[1] = 2.0 / kPi * (-j[0] / x + lg * j[1] + s1);
  for (int n = 1; n < nmax; ++n) y[n + 1] = 2.0 * n / x * y[n] - y[n - 1];
  y.resize(nmax + 1);
  return y;
}

std::vector<double> derivative(const std::vector<double>& values, int nmax, double x) {
  if (static_cast<int>(values.size()) < nmax + 2)
    throw InvalidInput("bessel::derivative: need orders up to nmax + 1");
  std::vector<double> d(nmax + 1);
  d[0] = -values[1];
  for (int n = 1; n <= nmax; ++n) d[n] = values[n - 1] - n / x * values[n];
  return d;
}

}  // namespace helmdd::bessel
