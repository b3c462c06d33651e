#pragma once

#include <memory>

#include <nlohmann/json.hpp>

#include "mesh.hpp"

namespace capillary {

class CapillaryBody;
using BodyPtr = std::shared_ptr<const CapillaryBody>;

// A convex body meeting the supporting plane at the mesh's contact angle,
// represented by its support function h sampled on the mesh. h is the single
// source of truth; everything else is a derived cache computed once at
// construction. Instances are immutable, so concurrent reads are safe.
class CapillaryBody {
public:
  CapillaryBody(MeshPtr mesh, Eigen::VectorXd h);

  const MeshPtr& mesh_ptr() const { return mesh_; }
  const CapMesh& mesh() const { return *mesh_; }

  const ScalarField& support() const { return h_; }
  // u = h / ell; constant for caps, Neumann at the boundary for valid bodies.
  const ScalarField& capillary_support() const { return u_; }
  // W = hessian(h) + h*I, the area matrix whose determinant is the
  // reciprocal Gauss curvature density.
  const SymMatrixField& area_matrix() const { return area_; }
  const ScalarField& area_det() const { return area_det_; }

  double min_support() const { return min_h_; }
  double max_support() const { return max_h_; }
  double min_area_eig() const { return min_eig_; }

  // Robin defect max over boundary nodes of |normal_derivative(h) - cot(theta) h|,
  // the residual vector in boundary_ids() order.
  const Eigen::VectorXd& robin_residual() const { return robin_residual_; }
  double robin_defect() const { return robin_defect_; }
  Eigen::Index worst_robin_node() const { return worst_robin_node_; }

  double evenness_defect() const { return evenness_defect_; }
  bool is_even() const;

  BodyPtr scaled(double r) const;

private:
  MeshPtr mesh_;
  ScalarField h_, u_, area_det_;
  SymMatrixField area_;
  Eigen::VectorXd robin_residual_;
  double min_h_ = 0.0, max_h_ = 0.0, min_eig_ = 0.0;
  double robin_defect_ = 0.0, evenness_defect_ = 0.0;
  Eigen::Index worst_robin_node_ = -1;
};

// The model cap of radius r: h = r * ell.
BodyPtr make_cap(MeshPtr mesh, double r);

// Wraps an arbitrary support field (no validation beyond finiteness and size;
// run validate() to certify it).
BodyPtr make_body_from_support(MeshPtr mesh, Eigen::VectorXd h);

// Support-function term of a horizontal shift: <x, nu> with nu the unit
// normal at the node. offset has mesh->dim() entries.
ScalarField horizontal_support_term(const CapMesh& mesh, const std::vector<double>& offset);

// h_new = h + <x, nu>. The added term is linear, so the area matrix and all
// measures are unchanged; positivity of the result is checked.
BodyPtr translate_horizontal(const CapillaryBody& body, const std::vector<double>& offset);

// u = 1 + eps * g, h = ell * u. g should be even with vanishing normal
// derivative; the result is checked for convexity and throws with the worst
// eigenvalue if eps was too large.
BodyPtr perturbed_cap(MeshPtr mesh, const ScalarField& g, double eps);

// Negative tolerance means auto: max(1e-8, 10 * mesh stencil error) * max(h).
// The stencil-error floor keeps honestly constructed smooth bodies (whose
// discrete Robin and convexity defects are at stencil order) from failing
// while still scaling down under refinement.
struct ValidationOptions {
  double tol_psd = -1.0;
  double tol_robin = -1.0;
  double tol_even = -1.0;
  bool require_even = false;
};

struct ValidationReport {
  bool pass = false;

  bool positive = false;
  double min_h = 0.0;

  bool psd_ok = false;
  double min_eig = 0.0;
  double tol_psd = 0.0;

  bool robin_ok = false;
  double robin_defect = 0.0;
  double tol_robin = 0.0;
  Eigen::Index worst_robin_node = -1;

  bool even_ok = false;
  bool even_required = false;
  double evenness_defect = 0.0;
  double tol_even = 0.0;

  double scale = 0.0;

  nlohmann::json to_json() const;
};

// Reports, never throws.
ValidationReport validate(const CapillaryBody& body, const ValidationOptions& opts = {});

}  // namespace capillary
