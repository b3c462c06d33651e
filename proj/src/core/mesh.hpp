#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <memory>
#include <vector>

#include "util.hpp"

namespace capillary {

using ScalarField = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

// Contact angle of the supporting plane, in (0, pi).
class ContactAngle {
public:
  explicit ContactAngle(double radians);
  double value() const { return radians_; }
  double cos() const { return cos_; }
  double sin() const { return sin_; }
  double cot() const { return cos_ / sin_; }

private:
  double radians_, cos_, sin_;
};

// Components of a tangent vector field in the orthonormal polar frame
// (e_psi, e_azimuth). For the 1-d cap only comp_psi is populated.
struct VectorField {
  Eigen::VectorXd comp_psi;
  Eigen::VectorXd comp_az;
};

// Per-node symmetric matrix field in the same frame. For dim 1 only m11 is
// populated; for dim 2 entries are (m11, m12, m22).
struct SymMatrixField {
  int dim = 0;
  Eigen::VectorXd m11, m12, m22;

  Eigen::Index size() const { return m11.size(); }
  double det(Eigen::Index i) const {
    return dim == 1 ? m11[i] : m11[i] * m22[i] - m12[i] * m12[i];
  }
  double trace(Eigen::Index i) const { return dim == 1 ? m11[i] : m11[i] + m22[i]; }
  double min_eig(Eigen::Index i) const {
    if (dim == 1) return m11[i];
    double half_tr = 0.5 * (m11[i] + m22[i]);
    double disc = 0.25 * (m11[i] - m22[i]) * (m11[i] - m22[i]) + m12[i] * m12[i];
    return half_tr - std::sqrt(disc);
  }
  Eigen::VectorXd determinant() const {
    if (dim == 1) return m11;
    return (m11.cwiseProduct(m22) - m12.cwiseProduct(m12)).eval();
  }
};

// Finite-difference mesh on the spherical cap of polar radius theta.
//
// dim == 2: geodesic polar coordinates (psi, azimuth) about the cap's apex.
//   Rings are staggered off the apex: psi_j = (j + 1/2) * dpsi with
//   dpsi = theta / (rings - 1/2), so the last ring lies exactly on the
//   boundary psi = theta and no node sits on the coordinate singularity.
//   Node ordering is polar-major, azimuth-minor: index = ring * azimuths + k.
// dim == 1: the cap is an arc; nodes carry a signed coordinate in
//   [-theta, theta] (uniform, endpoints included). "Azimuth" degenerates to
//   the side of the apex (reported as 0 or pi).
//
// Derivatives are covariant with respect to the round metric. Interior
// stencils are 5-point (fourth order), rows at and next to the boundary fall
// back to shifted/one-sided stencils; the boundary row of d_psi is the
// one-sided second-order stencil that also serves as the Robin operator.
// Stencils reaching past the apex use the across-pole identification
// g(-psi, a) = g(psi, a + pi).
class CapMesh {
public:
  static std::shared_ptr<const CapMesh> build(int dim, ContactAngle theta, int res_psi,
                                              int res_az = 0);

  int dim() const { return dim_; }
  const ContactAngle& theta() const { return theta_; }
  int rings() const { return res_psi_; }
  int azimuths() const { return res_az_; }
  Eigen::Index size() const { return psi_.size(); }

  // Node data. polar() is the geodesic distance from the apex; for dim 1 it
  // is |x| of the signed coordinate, which is exposed as signed_coord().
  const Eigen::VectorXd& polar() const { return psi_; }
  const Eigen::VectorXd& azimuth() const { return az_; }
  const Eigen::VectorXd& signed_coord() const { return signed_; }
  const Eigen::VectorXd& ell() const { return ell_; }
  const Eigen::VectorXd& weights() const { return w_; }
  const Eigen::VectorXd& e_tangential() const { return e_tan_; }
  const std::vector<Eigen::Index>& boundary_ids() const { return boundary_ids_; }
  bool is_boundary(Eigen::Index i) const { return is_boundary_[i]; }
  const std::vector<Eigen::Index>& reflect_index() const { return reflect_; }

  // Ambient position of node i (the last coordinate is the height above the
  // supporting plane); for dim 1 the second entry is the height.
  std::array<double, 3> node_position(Eigen::Index i) const;

  double integrate(const ScalarField& g) const;

  VectorField gradient(const ScalarField& g) const;
  SymMatrixField hessian(const ScalarField& g) const;
  SymMatrixField area_operator(const ScalarField& g) const;  // hessian(g) + g*I

  // Outward normal derivative on the boundary ring, in boundary_ids() order.
  Eigen::VectorXd normal_derivative(const ScalarField& g) const;

  Eigen::VectorXd reflect(const ScalarField& g) const;
  Eigen::VectorXd reflect_even(const ScalarField& g) const;  // (g + g∘reflect)/2
  double evenness_defect(const ScalarField& g) const;
  bool is_even(const ScalarField& g, double tol) const;

  // Raw difference operators (all nodes x all nodes).
  const SpMat& d_psi() const { return d_psi_; }
  const SpMat& d_psi2() const { return d_psi2_; }
  const SpMat& d_az() const { return d_az_; }
  const SpMat& d_az2() const { return d_az2_; }
  const SpMat& d_cross() const { return d_cross_; }

  // Max-norm of area_operator(ell) - I; the measured stencil error of this
  // mesh, used to calibrate mesh-dependent validation tolerances.
  double stencil_error() const;

  // Per-node 1/sin(psi) and cot(psi) (dim 2 only).
  const Eigen::VectorXd& inv_sin() const { return inv_sin_; }
  const Eigen::VectorXd& cot_psi() const { return cot_psi_; }

  bool compatible_with(const CapMesh& other) const;
  void require_field(const ScalarField& g, const char* what) const;

private:
  CapMesh() = default;
  void build_1d();
  void build_2d();
  void finalize_common();

  int dim_ = 0;
  ContactAngle theta_{1.0};
  int res_psi_ = 0, res_az_ = 0;

  Eigen::VectorXd psi_, az_, signed_, ell_, w_, e_tan_, inv_sin_, cot_psi_;
  std::vector<Eigen::Index> boundary_ids_;
  std::vector<char> is_boundary_;
  std::vector<Eigen::Index> reflect_;

  SpMat d_psi_, d_psi2_, d_az_, d_az2_, d_cross_;
  mutable double stencil_error_ = -1.0;
};

using MeshPtr = std::shared_ptr<const CapMesh>;

// Closed-form reference values for the model cap.
double cap_surface_area(int dim, double theta);        // |C_theta|
double cap_hat_volume(int dim, double theta);          // |Ĉ_theta|
double cap_support_integral(int dim, double theta);    // ∫ ell over C_theta

}  // namespace capillary
