#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "body.hpp"
#include "orlicz.hpp"

namespace capillary {

// V = 1/(n+1) * integral of h * det(W).
double volume(const CapillaryBody& body);

// A = integral of ell * det(W), the energy of the wetted region.
double wetting_energy(const CapillaryBody& body);

enum class DensityKind { surface, lp, orlicz, cone_volume, data };

std::string density_kind_name(DensityKind kind);
DensityKind density_kind_from_name(const std::string& name);

// A measure on the cap given by a pointwise density against the round area
// element. `total()` is its mass.
struct MeasureDensity {
  MeshPtr mesh;
  ScalarField values;
  DensityKind kind = DensityKind::data;
  double exponent = 0.0;  // lp only
  GaugePtr gauge;         // orlicz only

  double total() const { return mesh->integrate(values); }
  nlohmann::json describe() const;
};

MeasureDensity surface_density(const CapillaryBody& body);                           // ell * det W
MeasureDensity lp_density(const CapillaryBody& body, double p);                      // ell * h^(1-p) * det W
MeasureDensity orlicz_density(const CapillaryBody& body, GaugePtr phi);              // phi(ell/h) * h * det W
MeasureDensity cone_volume_density(const CapillaryBody& body);                       // ell * h * det W / (n+1)
MeasureDensity data_density(MeshPtr mesh, ScalarField values);                       // raw prescribed data

// Fully symmetric multilinear form with Q(A,...,A) = det A, computed by
// subset inclusion-exclusion (exact, 2^k determinant calls). All matrices
// must be k x k where k is the number of arguments.
double mixed_discriminant(const std::vector<Eigen::MatrixXd>& mats);

// 1/(n+1) * integral of f * Q(area_op(g_1), ..., area_op(g_n)); args must
// have exactly mesh.dim() fields. Collapses to the volume integrand when all
// arguments coincide.
double mixed_volume(const CapMesh& mesh, const ScalarField& f, const std::vector<ScalarField>& args);

// First mixed volume: the (K,...,K,L) slot pattern of mixed_volume.
double v1(const CapillaryBody& K, const CapillaryBody& L);
double v1(const CapillaryBody& K, const ScalarField& h_L);

// V_phi(K,L) = 1/(n+1) * integral of phi(h_L/h_K) * h_K * det(W_K).
double orlicz_mixed_volume(const OrliczGauge& phi, const CapillaryBody& K, const CapillaryBody& L);

// Max-norm difference between det(area_op(h)) and the determinant of the
// equivalent operator written in u = h/ell:
//   ell*hess(u) + cos(theta)*(grad(u) x e_tan + e_tan x grad(u)) + u*I.
// Zero analytically; at stencil order discretely.
double uform_residual(const CapillaryBody& body);

}  // namespace capillary
