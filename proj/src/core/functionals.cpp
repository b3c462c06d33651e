#include "functionals.hpp"

#include <cmath>

namespace capillary {

double volume(const CapillaryBody& body) {
  ScalarField g = body.support().cwiseProduct(body.area_det());
  return body.mesh().integrate(g) / (body.mesh().dim() + 1);
}

double wetting_energy(const CapillaryBody& body) {
  ScalarField g = body.mesh().ell().cwiseProduct(body.area_det());
  return body.mesh().integrate(g);
}

std::string density_kind_name(DensityKind kind) {
  switch (kind) {
    case DensityKind::surface: return "surface";
    case DensityKind::lp: return "lp";
    case DensityKind::orlicz: return "orlicz";
    case DensityKind::cone_volume: return "cone-volume";
    case DensityKind::data: return "data";
  }
  fail(ErrorCode::internal, "unreachable density kind");
}

DensityKind density_kind_from_name(const std::string& name) {
  if (name == "surface") return DensityKind::surface;
  if (name == "lp") return DensityKind::lp;
  if (name == "orlicz") return DensityKind::orlicz;
  if (name == "cone-volume") return DensityKind::cone_volume;
  if (name == "data") return DensityKind::data;
  fail(ErrorCode::invalid_argument, "unknown density kind '" + name + "'");
}

nlohmann::json MeasureDensity::describe() const {
  nlohmann::json j = {{"kind", density_kind_name(kind)}, {"total", total()}};
  if (kind == DensityKind::lp) j["p"] = exponent;
  if (kind == DensityKind::orlicz && gauge) j["gauge"] = gauge->spec();
  return j;
}

MeasureDensity surface_density(const CapillaryBody& body) {
  return {body.mesh_ptr(), body.mesh().ell().cwiseProduct(body.area_det()), DensityKind::surface,
          0.0, nullptr};
}

MeasureDensity lp_density(const CapillaryBody& body, double p) {
  if (body.min_support() <= 0.0)
    fail(ErrorCode::invalid_argument, "measure density needs a positive support function");
  ScalarField v = body.mesh().ell().cwiseProduct(body.area_det());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] *= std::pow(body.support()[i], 1.0 - p);
  return {body.mesh_ptr(), std::move(v), DensityKind::lp, p, nullptr};
}

MeasureDensity orlicz_density(const CapillaryBody& body, GaugePtr phi) {
  if (!phi) fail(ErrorCode::invalid_argument, "measure density needs a gauge");
  if (body.min_support() <= 0.0)
    fail(ErrorCode::invalid_argument, "measure density needs a positive support function");
  const auto& mesh = body.mesh();
  ScalarField v(mesh.size());
  for (Eigen::Index i = 0; i < mesh.size(); ++i)
    v[i] = phi->value(mesh.ell()[i] / body.support()[i]) * body.support()[i] * body.area_det()[i];
  return {body.mesh_ptr(), std::move(v), DensityKind::orlicz, 0.0, std::move(phi)};
}

MeasureDensity cone_volume_density(const CapillaryBody& body) {
  ScalarField v = body.mesh().ell().cwiseProduct(body.support()).cwiseProduct(body.area_det()) /
                  (body.mesh().dim() + 1);
  return {body.mesh_ptr(), std::move(v), DensityKind::cone_volume, 0.0, nullptr};
}

MeasureDensity data_density(MeshPtr mesh, ScalarField values) {
  if (!mesh) fail(ErrorCode::invalid_argument, "data density needs a mesh");
  mesh->require_field(values, "density values");
  return {std::move(mesh), std::move(values), DensityKind::data, 0.0, nullptr};
}

double mixed_discriminant(const std::vector<Eigen::MatrixXd>& mats) {
  const int k = static_cast<int>(mats.size());
  if (k == 0) fail(ErrorCode::invalid_argument, "mixed discriminant needs at least one matrix");
  for (const auto& m : mats)
    if (m.rows() != k || m.cols() != k)
      fail(ErrorCode::invalid_argument, "mixed discriminant needs k matrices of size k x k");

  double acc = 0.0;
  for (unsigned mask = 1; mask < (1u << k); ++mask) {
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(k, k);
    int count = 0;
    for (int i = 0; i < k; ++i)
      if (mask & (1u << i)) {
        sum += mats[i];
        ++count;
      }
    double sign = ((k - count) % 2 == 0) ? 1.0 : -1.0;
    acc += sign * sum.determinant();
  }
  double kfact = 1.0;
  for (int i = 2; i <= k; ++i) kfact *= i;
  return acc / kfact;
}

namespace {

// Q of two symmetric 2x2 matrices: the bilinear form whose diagonal is det.
inline double q2(const SymMatrixField& A, const SymMatrixField& B, Eigen::Index i) {
  return 0.5 * (A.m11[i] * B.m22[i] + A.m22[i] * B.m11[i] - 2.0 * A.m12[i] * B.m12[i]);
}

}  // namespace

double mixed_volume(const CapMesh& mesh, const ScalarField& f, const std::vector<ScalarField>& args) {
  mesh.require_field(f, "mixed volume multiplier");
  if (static_cast<int>(args.size()) != mesh.dim())
    fail(ErrorCode::invalid_argument, "mixed volume needs exactly dim area arguments");
  for (const auto& g : args) mesh.require_field(g, "mixed volume argument");

  ScalarField integrand(mesh.size());
  if (mesh.dim() == 1) {
    SymMatrixField A = mesh.area_operator(args[0]);
    integrand = f.cwiseProduct(A.m11);
  } else {
    SymMatrixField A = mesh.area_operator(args[0]);
    SymMatrixField B = mesh.area_operator(args[1]);
    for (Eigen::Index i = 0; i < mesh.size(); ++i) integrand[i] = f[i] * q2(A, B, i);
  }
  return mesh.integrate(integrand) / (mesh.dim() + 1);
}

double v1(const CapillaryBody& K, const ScalarField& h_L) {
  const auto& mesh = K.mesh();
  mesh.require_field(h_L, "second support function");
  ScalarField integrand(mesh.size());
  if (mesh.dim() == 1) {
    SymMatrixField B = mesh.area_operator(h_L);
    integrand = K.support().cwiseProduct(B.m11);
  } else {
    SymMatrixField B = mesh.area_operator(h_L);
    const SymMatrixField& A = K.area_matrix();
    for (Eigen::Index i = 0; i < mesh.size(); ++i) integrand[i] = K.support()[i] * q2(A, B, i);
  }
  return mesh.integrate(integrand) / (mesh.dim() + 1);
}

double v1(const CapillaryBody& K, const CapillaryBody& L) {
  if (!K.mesh().compatible_with(L.mesh()))
    fail(ErrorCode::mesh_mismatch, "first mixed volume needs bodies on a common mesh");
  return v1(K, L.support());
}

double orlicz_mixed_volume(const OrliczGauge& phi, const CapillaryBody& K, const CapillaryBody& L) {
  if (!K.mesh().compatible_with(L.mesh()))
    fail(ErrorCode::mesh_mismatch, "Orlicz mixed volume needs bodies on a common mesh");
  if (K.min_support() <= 0.0)
    fail(ErrorCode::invalid_argument, "Orlicz mixed volume needs a positive base support function");
  const auto& mesh = K.mesh();
  ScalarField integrand(mesh.size());
  for (Eigen::Index i = 0; i < mesh.size(); ++i)
    integrand[i] = phi.value(L.support()[i] / K.support()[i]) * K.support()[i] * K.area_det()[i];
  return mesh.integrate(integrand) / (mesh.dim() + 1);
}

double uform_residual(const CapillaryBody& body) {
  const auto& mesh = body.mesh();
  const ScalarField& u = body.capillary_support();
  SymMatrixField hess_u = mesh.hessian(u);
  VectorField grad_u = mesh.gradient(u);
  const double cos_theta = mesh.theta().cos();

  double worst = 0.0;
  for (Eigen::Index i = 0; i < mesh.size(); ++i) {
    double det_u;
    if (mesh.dim() == 1) {
      double m = mesh.ell()[i] * hess_u.m11[i] +
                 2.0 * cos_theta * mesh.e_tangential()[i] * grad_u.comp_psi[i] + u[i];
      det_u = m;
    } else {
      double m11 = mesh.ell()[i] * hess_u.m11[i] +
                   2.0 * cos_theta * mesh.e_tangential()[i] * grad_u.comp_psi[i] + u[i];
      double m12 = mesh.ell()[i] * hess_u.m12[i] +
                   cos_theta * mesh.e_tangential()[i] * grad_u.comp_az[i];
      double m22 = mesh.ell()[i] * hess_u.m22[i] + u[i];
      det_u = m11 * m22 - m12 * m12;
    }
    worst = std::max(worst, std::abs(det_u - body.area_det()[i]));
  }
  return worst;
}

}  // namespace capillary
