#include "helmdd/pml.hpp"

namespace helmdd::pml {

std::string to_string(StretchKind kind) {
  switch (kind) {
    case StretchKind::SigmaMinus1: return "sigma_minus1";
    case StretchKind::SigmaMinus2: return "sigma_minus2";
    case StretchKind::Sigma2: return "sigma2";
  }
  return "unknown";
}

StretchKind parse_stretch_kind(const std::string& name) {
  if (name == "sigma_minus1" || name == "sigma-1") return StretchKind::SigmaMinus1;
  if (name == "sigma_minus2" || name == "sigma-2") return StretchKind::SigmaMinus2;
  if (name == "sigma2" || name == "sigma_2") return StretchKind::Sigma2;
  throw InvalidInput("unknown stretch function '" + name + "'");
}

double sigma(const StretchFunction& stretch, double depth_remaining, double layer_length) {
  if (!(depth_remaining > 0.0))
    throw InvalidInput("sigma: depth_remaining must be positive (outer boundary sampled)");
  // Round-off from coordinate arithmetic may push the depth a hair past the layer.
  if (depth_remaining > layer_length * (1.0 + 1e-9))
    throw InvalidInput("sigma: depth_remaining exceeds the layer length");
  switch (stretch.kind) {
    case StretchKind::SigmaMinus1: return 1.0 / depth_remaining;
    case StretchKind::SigmaMinus2: return 2.0 / (depth_remaining * depth_remaining);
    case StretchKind::Sigma2: return stretch.alpha * depth_remaining * depth_remaining;
  }
  return 0.0;
}

StretchCoefficients coefficients_from_sigma(int dim, const std::array<double, 3>& sigmas,
                                            double omega) {
  StretchCoefficients c;
  Complex jac{1.0, 0.0};
  for (int a = 0; a < dim; ++a) {
    c.stretch[a] = sigmas[a] == 0.0 ? Complex{1.0, 0.0} : Complex{1.0, -sigmas[a] / omega};
    jac *= c.stretch[a];
  }
  c.jacobian = jac;
  for (int a = 0; a < dim; ++a) c.tensor[a] = jac / (c.stretch[a] * c.stretch[a]);
  return c;
}

grid::BoxDomain extended_domain(const grid::BoxDomain& physical, const PmlSpec& spec) {
  grid::BoxDomain ext = physical;
  for (int a = 0; a < physical.dim; ++a) {
    ext.lower[a] -= spec.lengths[2 * a];
    ext.upper[a] += spec.lengths[2 * a + 1];
  }
  return ext;
}

std::array<double, 3> global_sigmas(const PmlSpec& spec, const grid::BoxDomain& physical,
                                    const Point& point) {
  std::array<double, 3> s{0.0, 0.0, 0.0};
  for (int a = 0; a < physical.dim; ++a) {
    const double x = point[a];
    if (x < physical.lower[a]) {
      const double len = spec.lengths[2 * a];
      if (len <= 0.0) throw InvalidInput("stretch_coeffs: point outside the extended domain");
      s[a] = sigma(spec.stretch, x - (physical.lower[a] - len), len);
    } else if (x > physical.upper[a]) {
      const double len = spec.lengths[2 * a + 1];
      if (len <= 0.0) throw InvalidInput("stretch_coeffs: point outside the extended domain");
      s[a] = sigma(spec.stretch, (physical.upper[a] + len) - x, len);
    }
  }
  return s;
}

StretchCoefficients stretch_coeffs(const PmlSpec& spec, const grid::BoxDomain& physical,
                                   const Point& point) {
  return coefficients_from_sigma(physical.dim, global_sigmas(spec, physical, point), spec.omega);
}

StretchCoefficients interface_stretch_coeffs(const std::optional<PmlSpec>& global,
                                             const grid::BoxDomain& physical,
                                             const InterfaceLayer& layer, const Point& point) {
  std::array<double, 3> s{0.0, 0.0, 0.0};
  if (global) s = global_sigmas(*global, physical, point);
  for (int a = 0; a < layer.dim; ++a) {
    const double len = layer.thickness(a);
    if (layer.interior_face[2 * a]) {
      const double depth = point[a] - layer.lower[a];
      if (depth < len) s[a] += sigma(layer.stretch, depth, len);
    }
    if (layer.interior_face[2 * a + 1]) {
      const double depth = layer.upper[a] - point[a];
      if (depth < len) s[a] += sigma(layer.stretch, depth, len);
    }
  }
  return coefficients_from_sigma(layer.dim, s, layer.omega);
}

}  // namespace helmdd::pml
