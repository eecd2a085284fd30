#pragma once

#include <vector>

namespace helmdd::bessel {

/// J_0..J_nmax at x > 0 by Miller's downward recurrence, normalised with
/// J_0 + 2 sum J_2k = 1.
std::vector<double> bessel_j(int nmax, double x);

/// Y_0..Y_nmax at x > 0 from Neumann series in J, then forward recurrence.
std::vector<double> bessel_y(int nmax, double x);

/// Derivatives from the values: f'_n = f_{n-1} - (n/x) f_n, f'_0 = -f_1.
/// `values` must hold orders 0..nmax+1 for order nmax.
std::vector<double> derivative(const std::vector<double>& values, int nmax, double x);

}  // namespace helmdd::bessel
