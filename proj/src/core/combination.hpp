#pragma once

#include "body.hpp"
#include "orlicz.hpp"

namespace capillary {

// Weighted combination of two bodies through a gauge. The weights are
// nonnegative and not both zero; the gauge needs only monotonicity and
// convexity here, not full class membership.
struct CombinationSpec {
  GaugePtr phi;
  double alpha = 1.0;
  double beta = 1.0;
};

// Nodewise root h(x) of alpha*phi(h1/t) + beta*phi(h2/t) = 1, which is the
// support function of the combined body. The root is bracketed in closed
// form, bisected, then Newton-polished to relative 1e-12. The result is run
// through the body validator; convexity and the boundary condition are
// asserted, not assumed, and a failure throws with the worst node.
BodyPtr combine(const CombinationSpec& spec, const CapillaryBody& K1, const CapillaryBody& K2);

// combine with weights (1, eps); the curve eps -> body is the perturbation
// whose volume derivative the variational formula describes.
BodyPtr perturb(const OrliczGauge& phi, const CapillaryBody& K1, const CapillaryBody& K2, double eps);

// Nodewise d/deps of the perturbed support function at eps = 0:
//   h1 * phi(m*h2/h1) / (m^2 * phi'(m)),  m = phi^{-1}(1).
// Reduces to h1*phi(h2/h1)/phi'(1) for gauges with phi(1) = 1.
ScalarField perturbation_derivative(const OrliczGauge& phi, const CapillaryBody& K1,
                                    const CapillaryBody& K2);

// Largest |alpha*phi(h1/h) + beta*phi(h2/h) - 1| over nodes; the combine
// contract keeps this at or below 1e-11.
double combination_root_residual(const CombinationSpec& spec, const CapillaryBody& K1,
                                 const CapillaryBody& K2, const CapillaryBody& M);

}  // namespace capillary
