#include "body.hpp"

#include <cmath>
#include <sstream>

namespace capillary {

CapillaryBody::CapillaryBody(MeshPtr mesh, Eigen::VectorXd h) : mesh_(std::move(mesh)), h_(std::move(h)) {
  if (!mesh_) fail(ErrorCode::invalid_argument, "body needs a mesh");
  mesh_->require_field(h_, "support function");

  u_ = h_.cwiseQuotient(mesh_->ell());
  area_ = mesh_->area_operator(h_);
  area_det_ = area_.determinant();

  min_h_ = h_.minCoeff();
  max_h_ = h_.maxCoeff();
  min_eig_ = area_.min_eig(0);
  for (Eigen::Index i = 1; i < area_.size(); ++i) min_eig_ = std::min(min_eig_, area_.min_eig(i));

  const auto& bids = mesh_->boundary_ids();
  Eigen::VectorXd dn = mesh_->normal_derivative(h_);
  robin_residual_.resize(dn.size());
  robin_defect_ = 0.0;
  for (Eigen::Index b = 0; b < dn.size(); ++b) {
    robin_residual_[b] = dn[b] - mesh_->theta().cot() * h_[bids[b]];
    if (std::abs(robin_residual_[b]) >= robin_defect_) {
      robin_defect_ = std::abs(robin_residual_[b]);
      worst_robin_node_ = bids[b];
    }
  }

  evenness_defect_ = mesh_->evenness_defect(h_);
}

bool CapillaryBody::is_even() const {
  return evenness_defect_ <= 1e-12 * std::max(1.0, std::abs(max_h_));
}

BodyPtr CapillaryBody::scaled(double r) const {
  if (!(r > 0.0)) fail(ErrorCode::invalid_argument, "scaling factor must be positive");
  return std::make_shared<CapillaryBody>(mesh_, (r * h_).eval());
}

BodyPtr make_cap(MeshPtr mesh, double r) {
  if (!mesh) fail(ErrorCode::invalid_argument, "cap needs a mesh");
  if (!(r > 0.0) || !std::isfinite(r)) fail(ErrorCode::invalid_argument, "cap radius must be positive");
  return std::make_shared<CapillaryBody>(mesh, (r * mesh->ell()).eval());
}

BodyPtr make_body_from_support(MeshPtr mesh, Eigen::VectorXd h) {
  if (!mesh) fail(ErrorCode::invalid_argument, "body needs a mesh");
  if (!h.allFinite()) fail(ErrorCode::invalid_argument, "support function has non-finite entries");
  return std::make_shared<CapillaryBody>(std::move(mesh), std::move(h));
}

ScalarField horizontal_support_term(const CapMesh& mesh, const std::vector<double>& offset) {
  if (static_cast<int>(offset.size()) != mesh.dim())
    fail(ErrorCode::invalid_argument, "horizontal offset needs one entry per horizontal direction");
  ScalarField term(mesh.size());
  if (mesh.dim() == 1) {
    for (Eigen::Index i = 0; i < mesh.size(); ++i)
      term[i] = offset[0] * std::sin(mesh.signed_coord()[i]);
  } else {
    for (Eigen::Index i = 0; i < mesh.size(); ++i) {
      double s = std::sin(mesh.polar()[i]);
      term[i] = s * (offset[0] * std::cos(mesh.azimuth()[i]) + offset[1] * std::sin(mesh.azimuth()[i]));
    }
  }
  return term;
}

BodyPtr translate_horizontal(const CapillaryBody& body, const std::vector<double>& offset) {
  ScalarField h = body.support() + horizontal_support_term(body.mesh(), offset);
  if (h.minCoeff() <= 0.0) {
    std::ostringstream os;
    os << "horizontal translate leaves the admissible class: min support " << h.minCoeff();
    fail(ErrorCode::validation, os.str());
  }
  return std::make_shared<CapillaryBody>(body.mesh_ptr(), std::move(h));
}

BodyPtr perturbed_cap(MeshPtr mesh, const ScalarField& g, double eps) {
  if (!mesh) fail(ErrorCode::invalid_argument, "perturbed cap needs a mesh");
  mesh->require_field(g, "perturbation field");
  ScalarField h = mesh->ell().cwiseProduct(ScalarField::Ones(mesh->size()) + eps * g);
  auto body = std::make_shared<CapillaryBody>(mesh, std::move(h));
  double tol = std::max(1e-8, 10.0 * mesh->stencil_error()) * body->max_support();
  if (body->min_support() <= 0.0 || body->min_area_eig() < -tol) {
    std::ostringstream os;
    os << "perturbation too large: min support " << body->min_support() << ", min area eigenvalue "
       << body->min_area_eig();
    fail(ErrorCode::validation, os.str());
  }
  return body;
}

nlohmann::json ValidationReport::to_json() const {
  return {{"pass", pass},
          {"positive", {{"pass", positive}, {"min_h", min_h}}},
          {"convex", {{"pass", psd_ok}, {"min_eig", min_eig}, {"tol", tol_psd}}},
          {"robin",
           {{"pass", robin_ok},
            {"defect", robin_defect},
            {"tol", tol_robin},
            {"worst_node", worst_robin_node}}},
          {"even",
           {{"pass", even_ok},
            {"required", even_required},
            {"defect", evenness_defect},
            {"tol", tol_even}}},
          {"scale", scale}};
}

ValidationReport validate(const CapillaryBody& body, const ValidationOptions& opts) {
  ValidationReport rep;
  rep.scale = std::max(body.max_support(), 0.0);
  double floor = std::max(1e-8, 10.0 * body.mesh().stencil_error());
  double auto_tol = floor * std::max(rep.scale, 1e-300);

  rep.tol_psd = opts.tol_psd >= 0.0 ? opts.tol_psd : auto_tol;
  rep.tol_robin = opts.tol_robin >= 0.0 ? opts.tol_robin : auto_tol;
  rep.tol_even = opts.tol_even >= 0.0 ? opts.tol_even : 1e-12 * std::max(rep.scale, 1.0);

  rep.min_h = body.min_support();
  rep.positive = rep.min_h > 0.0;

  rep.min_eig = body.min_area_eig();
  rep.psd_ok = rep.min_eig >= -rep.tol_psd;

  rep.robin_defect = body.robin_defect();
  rep.worst_robin_node = body.worst_robin_node();
  rep.robin_ok = rep.robin_defect <= rep.tol_robin;

  rep.even_required = opts.require_even;
  rep.evenness_defect = body.evenness_defect();
  rep.even_ok = !opts.require_even || rep.evenness_defect <= rep.tol_even;

  rep.pass = rep.positive && rep.psd_ok && rep.robin_ok && rep.even_ok;
  return rep;
}

}  // namespace capillary
