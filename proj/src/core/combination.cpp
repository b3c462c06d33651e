#include "combination.hpp"

#include <cmath>
#include <sstream>

namespace capillary {

namespace {

void check_spec(const CombinationSpec& spec) {
  if (!spec.phi) fail(ErrorCode::invalid_argument, "combination needs a gauge");
  if (!(spec.alpha >= 0.0) || !(spec.beta >= 0.0))
    fail(ErrorCode::invalid_argument, "combination weights must be nonnegative");
  if (spec.alpha + spec.beta <= 0.0)
    fail(ErrorCode::invalid_argument, "combination weights must not both vanish");
}

void check_pair(const CapillaryBody& K1, const CapillaryBody& K2) {
  if (!K1.mesh().compatible_with(K2.mesh()))
    fail(ErrorCode::mesh_mismatch, "combination needs bodies on a common mesh");
  if (K1.min_support() <= 0.0 || K2.min_support() <= 0.0)
    fail(ErrorCode::invalid_argument, "combination needs positive support functions");
}

// Root of alpha*phi(h1/t) + beta*phi(h2/t) = 1 for one node. q is the
// precomputed phi^{-1}(1/(alpha+beta)); the root lies in
// [min(h1,h2)/q, max(h1,h2)/q] because the left side is decreasing in t
// and equals 1 exactly at h/q when h1 = h2 = h.
double node_root(const OrliczGauge& phi, double alpha, double beta, double h1, double h2, double q) {
  auto g = [&](double t) { return alpha * phi.value(h1 / t) + beta * phi.value(h2 / t) - 1.0; };

  double lo = std::min(h1, h2) / q;
  double hi = std::max(h1, h2) / q;
  if (hi - lo <= 1e-15 * hi) return 0.5 * (lo + hi);

  // Bisect until Newton is safe, then polish.
  for (int it = 0; it < 40 && hi - lo > 1e-6 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  double t = 0.5 * (lo + hi);
  for (int it = 0; it < 30; ++it) {
    double slope = -(alpha * phi.deriv(h1 / t) * h1 + beta * phi.deriv(h2 / t) * h2) / (t * t);
    if (!(slope < 0.0)) break;
    double step = g(t) / slope;
    double next = t - step;
    if (next <= 0.0) break;
    t = next;
    if (std::abs(step) <= 1e-13 * t) break;
  }
  if (std::abs(g(t)) > 1e-11)
    fail(ErrorCode::internal, "combination root solve did not reach residual tolerance");
  return t;
}

BodyPtr combine_impl(const OrliczGauge& phi, double alpha, double beta, const CapillaryBody& K1,
                     const CapillaryBody& K2) {
  check_pair(K1, K2);
  const auto& mesh = K1.mesh();

  double q = phi.inverse(1.0 / (alpha + beta));
  if (!(q > 0.0)) fail(ErrorCode::internal, "combination bracket degenerate");

  ScalarField h(mesh.size());
  for (Eigen::Index i = 0; i < mesh.size(); ++i)
    h[i] = node_root(phi, alpha, beta, K1.support()[i], K2.support()[i], q);

  auto body = std::make_shared<CapillaryBody>(K1.mesh_ptr(), std::move(h));
  ValidationReport rep = validate(*body);
  if (!rep.pass) {
    std::ostringstream os;
    os << "combination failed validation:";
    if (!rep.positive) os << " min support " << rep.min_h << ";";
    if (!rep.psd_ok) os << " min area eigenvalue " << rep.min_eig << " (tol " << rep.tol_psd << ");";
    if (!rep.robin_ok)
      os << " boundary defect " << rep.robin_defect << " at node " << rep.worst_robin_node
         << " (tol " << rep.tol_robin << ");";
    fail(ErrorCode::validation, os.str());
  }
  return body;
}

}  // namespace

BodyPtr combine(const CombinationSpec& spec, const CapillaryBody& K1, const CapillaryBody& K2) {
  check_spec(spec);
  return combine_impl(*spec.phi, spec.alpha, spec.beta, K1, K2);
}

BodyPtr perturb(const OrliczGauge& phi, const CapillaryBody& K1, const CapillaryBody& K2, double eps) {
  if (!(eps >= 0.0)) fail(ErrorCode::invalid_argument, "perturbation weight must be nonnegative");
  return combine_impl(phi, 1.0, eps, K1, K2);
}

ScalarField perturbation_derivative(const OrliczGauge& phi, const CapillaryBody& K1,
                                    const CapillaryBody& K2) {
  check_pair(K1, K2);
  double m = phi.inverse(1.0);
  double dm = phi.deriv(m);
  if (!(dm > 0.0)) fail(ErrorCode::invalid_argument, "gauge has vanishing slope at phi^{-1}(1)");
  ScalarField d(K1.mesh().size());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    double h1 = K1.support()[i], h2 = K2.support()[i];
    d[i] = h1 * phi.value(m * h2 / h1) / (m * m * dm);
  }
  return d;
}

double combination_root_residual(const CombinationSpec& spec, const CapillaryBody& K1,
                                 const CapillaryBody& K2, const CapillaryBody& M) {
  check_spec(spec);
  check_pair(K1, K2);
  if (!M.mesh().compatible_with(K1.mesh()))
    fail(ErrorCode::mesh_mismatch, "combination residual needs bodies on a common mesh");
  double worst = 0.0;
  for (Eigen::Index i = 0; i < M.mesh().size(); ++i) {
    double t = M.support()[i];
    double r = spec.alpha * spec.phi->value(K1.support()[i] / t) +
               spec.beta * spec.phi->value(K2.support()[i] / t) - 1.0;
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

}  // namespace capillary
