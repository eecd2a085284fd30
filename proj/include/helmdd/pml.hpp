#pragma once

#include <array>
#include <optional>
#include <string>

#include "helmdd/grid.hpp"
#include "helmdd/types.hpp"

namespace helmdd::pml {

enum class StretchKind { SigmaMinus1, SigmaMinus2, Sigma2 };

/// Absorption profile as a function of the distance left to the outer
/// (Dirichlet) boundary of the layer.
struct StretchFunction {
  StretchKind kind = StretchKind::SigmaMinus1;
  double alpha = 30.0;  // Sigma2 only

  bool operator==(const StretchFunction&) const = default;
};

std::string to_string(StretchKind kind);
StretchKind parse_stretch_kind(const std::string& name);

/// Global absorbing layer around a physical box. `lengths[face]` is the layer
/// thickness outside box face `face`; zero disables the layer on that face.
struct PmlSpec {
  StretchFunction stretch;
  std::array<double, 6> lengths{0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  double omega = 1.0;
};

/// Per-point coefficients of the stretched operator. With s_j the complex
/// stretch factor on axis j: jacobian = prod s_j and tensor[j] = jacobian / s_j^2.
struct StretchCoefficients {
  std::array<Complex, 3> tensor{1.0, 1.0, 1.0};
  Complex jacobian{1.0, 0.0};
  std::array<Complex, 3> stretch{1.0, 1.0, 1.0};
};

/// sigma_{-1} = 1/d, sigma_{-2} = 2/d^2, sigma_2 = alpha d^2 with
/// d = depth_remaining in (0, layer_length].
double sigma(const StretchFunction& stretch, double depth_remaining, double layer_length);

/// Builds coefficients from per-axis absorption values.
StretchCoefficients coefficients_from_sigma(int dim, const std::array<double, 3>& sigmas,
                                            double omega);

/// Physical box grown by the layer lengths.
grid::BoxDomain extended_domain(const grid::BoxDomain& physical, const PmlSpec& spec);

/// Per-axis absorption of the global layer at `point` (zero inside the box).
std::array<double, 3> global_sigmas(const PmlSpec& spec, const grid::BoxDomain& physical,
                                    const Point& point);

StretchCoefficients stretch_coeffs(const PmlSpec& spec, const grid::BoxDomain& physical,
                                   const Point& point);

/// Layer placed on the interior faces of an overlapping subdomain: the
/// outermost `layers` cells next to each face flagged in `interior_face`.
struct InterfaceLayer {
  StretchFunction stretch;
  double omega = 1.0;
  int dim = 2;
  Point lower{};  // local (overlap-extended) box
  Point upper{};
  std::array<bool, 6> interior_face{};
  int layers = 1;
  Point spacing{1.0, 1.0, 1.0};  // cell size per axis

  double thickness(int axis) const { return layers * spacing[axis]; }
};

/// Interface stretching combined with the global layer, if any. On each axis
/// the absorption of the global layer and of the interface strip add.
StretchCoefficients interface_stretch_coeffs(const std::optional<PmlSpec>& global,
                                             const grid::BoxDomain& physical,
                                             const InterfaceLayer& layer, const Point& point);

}  // namespace helmdd::pml
