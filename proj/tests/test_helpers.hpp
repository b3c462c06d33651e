#pragma once

#include <cmath>
#include <vector>

#include "core/body.hpp"
#include "core/mesh.hpp"

namespace capillary::testing {

constexpr double kPi = 3.14159265358979323846;
constexpr double kThird = kPi / 3.0;

inline MeshPtr mesh2(int rings = 48, int azimuths = 0, double theta = kThird) {
  return CapMesh::build(2, ContactAngle(theta), rings, azimuths);
}

inline MeshPtr mesh1(int nodes = 257, double theta = kThird) {
  return CapMesh::build(1, ContactAngle(theta), nodes);
}

// Least-squares slope of log2(err) against log2(h) over a refinement ladder;
// errors and spacings must be positive and in matching order.
inline double order_fit(const std::vector<double>& spacings, const std::vector<double>& errors) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const auto n = static_cast<double>(spacings.size());
  for (size_t i = 0; i < spacings.size(); ++i) {
    double x = std::log2(spacings[i]);
    double y = std::log2(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline double max_abs_diff(const ScalarField& a, const ScalarField& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace capillary::testing
