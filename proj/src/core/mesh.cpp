#include "mesh.hpp"

#include <cmath>
#include <numbers>

namespace capillary {

namespace {
constexpr double kPi = std::numbers::pi;

using Triplets = std::vector<Eigen::Triplet<double>>;

Eigen::VectorXd offsets_to_coords(const std::vector<int>& offsets, double h) {
  Eigen::VectorXd x(offsets.size());
  for (size_t i = 0; i < offsets.size(); ++i) x[static_cast<Eigen::Index>(i)] = offsets[i] * h;
  return x;
}
}  // namespace

ContactAngle::ContactAngle(double radians) : radians_(radians) {
  if (!(radians > 0.0) || !(radians < kPi) || !std::isfinite(radians))
    fail(ErrorCode::invalid_argument, "contact angle must lie strictly between 0 and pi");
  cos_ = std::cos(radians);
  sin_ = std::sin(radians);
}

std::shared_ptr<const CapMesh> CapMesh::build(int dim, ContactAngle theta, int res_psi,
                                              int res_az) {
  if (dim != 1 && dim != 2) fail(ErrorCode::invalid_argument, "cap dimension must be 1 or 2");
  if (res_psi < 5) fail(ErrorCode::invalid_argument, "need at least 5 nodes in the polar direction");
  if (dim == 2) {
    if (res_az < 8) fail(ErrorCode::invalid_argument, "need at least 8 azimuth nodes");
    if (res_az % 2 != 0)
      fail(ErrorCode::invalid_argument, "azimuth count must be even so reflection maps nodes to nodes");
  }
  auto mesh = std::shared_ptr<CapMesh>(new CapMesh());
  mesh->dim_ = dim;
  mesh->theta_ = theta;
  mesh->res_psi_ = res_psi;
  mesh->res_az_ = dim == 2 ? res_az : 0;
  if (dim == 1)
    mesh->build_1d();
  else
    mesh->build_2d();
  mesh->finalize_common();
  return mesh;
}

// ----------------------------------------------------------------------------
// 1-d cap (an arc): signed coordinate x in [-theta, theta], endpoints included.

void CapMesh::build_1d() {
  const int n = res_psi_;
  const double th = theta_.value();
  const double h = 2.0 * th / (n - 1);

  signed_.resize(n);
  for (int i = 0; i < n; ++i) signed_[i] = -th + i * h;
  signed_[0] = -th;
  signed_[n - 1] = th;
  psi_ = signed_.cwiseAbs();
  az_ = (signed_.array() < 0.0).select(Eigen::VectorXd::Constant(n, kPi),
                                       Eigen::VectorXd::Zero(n));

  // Trapezoid weights with Gregory end corrections (third order): the end
  // pattern works out to (3/8, 7/6, 23/24) * h on each side.
  w_ = Eigen::VectorXd::Constant(n, h);
  w_[0] = w_[n - 1] = 0.5 * h;
  auto corr = [&](int i, double c) { w_[i] += c * h; };
  corr(0, -3.0 / 24), corr(1, 4.0 / 24), corr(2, -1.0 / 24);
  corr(n - 1, -3.0 / 24), corr(n - 2, 4.0 / 24), corr(n - 3, -1.0 / 24);

  boundary_ids_ = {0, static_cast<Eigen::Index>(n - 1)};
  is_boundary_.assign(n, 0);
  is_boundary_[0] = is_boundary_[n - 1] = 1;
  reflect_.resize(n);
  for (int i = 0; i < n; ++i) reflect_[i] = n - 1 - i;

  // Difference operators. Interior rows are fourth order; rows adjacent to an
  // endpoint shift their 5-point stencil, endpoint rows are one-sided 5-point
  // (fourth order for d/dx, third for the second derivative). The endpoint
  // d/dx row doubles as the Robin stencil, and its order caps how accurately
  // solved bodies can meet the contact condition, so it gets the full width.
  Triplets t1, t2;
  auto add_row = [&](Triplets& trips, int i, const std::vector<int>& offs, int order) {
    Eigen::VectorXd wts = fd_weights(0.0, offsets_to_coords(offs, h), order);
    for (size_t q = 0; q < offs.size(); ++q)
      trips.emplace_back(i, i + offs[q], wts[static_cast<Eigen::Index>(q)]);
  };
  for (int i = 0; i < n; ++i) {
    std::vector<int> offs;
    if (i == 0)
      offs = {0, 1, 2, 3, 4};
    else if (i == n - 1)
      offs = {-4, -3, -2, -1, 0};
    else if (i >= 2 && i <= n - 3)
      offs = {-2, -1, 0, 1, 2};
    else if (i == 1)
      offs = {-1, 0, 1, 2, 3};
    else  // i == n - 2
      offs = {-3, -2, -1, 0, 1};
    add_row(t1, i, offs, 1);
    add_row(t2, i, offs, 2);
  }
  d_psi_.resize(n, n);
  d_psi_.setFromTriplets(t1.begin(), t1.end());
  d_psi2_.resize(n, n);
  d_psi2_.setFromTriplets(t2.begin(), t2.end());
  d_az_.resize(n, n);
  d_az2_.resize(n, n);
  d_cross_.resize(n, n);

  e_tan_ = signed_.array().sin();
}

// ----------------------------------------------------------------------------
// 2-d cap: staggered polar rings, uniform azimuth.

void CapMesh::build_2d() {
  const int m = res_psi_;
  const int ma = res_az_;
  const Eigen::Index n = static_cast<Eigen::Index>(m) * ma;
  const double th = theta_.value();
  const double dpsi = th / (m - 0.5);
  const double daz = 2.0 * kPi / ma;

  psi_.resize(n);
  az_.resize(n);
  for (int j = 0; j < m; ++j) {
    double p = (j + 0.5) * dpsi;
    if (j == m - 1) p = th;  // exact boundary ring
    for (int k = 0; k < ma; ++k) {
      psi_[static_cast<Eigen::Index>(j) * ma + k] = p;
      az_[static_cast<Eigen::Index>(j) * ma + k] = k * daz;
    }
  }
  signed_ = psi_;

  // Quadrature: composite midpoint in psi against the area element
  // sin(psi) dpsi da. The last node sits on the right endpoint of a half
  // cell [theta - dpsi/2, theta], integrated with a three-point interpolatory
  // rule; Euler-Maclaurin derivative corrections are applied at the pole end
  // and at the junction with the half cell. Folding everything into per-node
  // weights gives the end cascade (3/8, 7/6, 23/24) * dpsi with fourth-order
  // global error, and every weight stays positive.
  Eigen::VectorXd vpsi = Eigen::VectorXd::Constant(m, dpsi);
  vpsi[m - 1] = 3.0 * dpsi / 8.0;
  vpsi[m - 2] = 7.0 * dpsi / 6.0;
  vpsi[m - 3] = 23.0 * dpsi / 24.0;
  vpsi[0] += 2.0 * dpsi / 24.0;
  vpsi[1] -= 3.0 * dpsi / 24.0;
  vpsi[2] += dpsi / 24.0;

  w_.resize(n);
  inv_sin_.resize(n);
  cot_psi_.resize(n);
  e_tan_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = std::sin(psi_[i]);
    w_[i] = vpsi[static_cast<int>(i / ma)] * s * daz;
    inv_sin_[i] = 1.0 / s;
    cot_psi_[i] = std::cos(psi_[i]) / s;
    e_tan_[i] = s;
  }

  boundary_ids_.clear();
  is_boundary_.assign(n, 0);
  for (int k = 0; k < ma; ++k) {
    Eigen::Index id = static_cast<Eigen::Index>(m - 1) * ma + k;
    boundary_ids_.push_back(id);
    is_boundary_[id] = 1;
  }
  reflect_.resize(n);
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < ma; ++k)
      reflect_[static_cast<Eigen::Index>(j) * ma + k] =
          static_cast<Eigen::Index>(j) * ma + (k + ma / 2) % ma;

  // Polar-direction operators. Stencils reaching below the apex use the
  // across-pole identification: ring jj < 0 at azimuth k is ring (-jj-1) at
  // azimuth k + ma/2.
  Triplets t1, t2;
  auto add_rows = [&](Triplets& trips, int j, const std::vector<int>& offs, int order) {
    Eigen::VectorXd wts = fd_weights(0.0, offsets_to_coords(offs, dpsi), order);
    for (int k = 0; k < ma; ++k) {
      Eigen::Index row = static_cast<Eigen::Index>(j) * ma + k;
      for (size_t q = 0; q < offs.size(); ++q) {
        int jj = j + offs[q];
        Eigen::Index col;
        if (jj >= 0)
          col = static_cast<Eigen::Index>(jj) * ma + k;
        else
          col = static_cast<Eigen::Index>(-jj - 1) * ma + (k + ma / 2) % ma;
        trips.emplace_back(row, col, wts[static_cast<Eigen::Index>(q)]);
      }
    }
  };
  for (int j = 0; j < m; ++j) {
    std::vector<int> offs;
    if (j == m - 1)
      offs = {-4, -3, -2, -1, 0};  // one-sided, full width: Robin row accuracy
    else if (j == m - 2)
      offs = {-3, -2, -1, 0, 1};
    else
      offs = {-2, -1, 0, 1, 2};
    add_rows(t1, j, offs, 1);
    add_rows(t2, j, offs, 2);
  }
  d_psi_.resize(n, n);
  d_psi_.setFromTriplets(t1.begin(), t1.end());
  d_psi2_.resize(n, n);
  d_psi2_.setFromTriplets(t2.begin(), t2.end());

  // Azimuth operators: centered 5-point, periodic.
  Triplets a1, a2;
  std::vector<int> aoffs = {-2, -1, 0, 1, 2};
  Eigen::VectorXd aw1 = fd_weights(0.0, offsets_to_coords(aoffs, daz), 1);
  Eigen::VectorXd aw2 = fd_weights(0.0, offsets_to_coords(aoffs, daz), 2);
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < ma; ++k) {
      Eigen::Index row = static_cast<Eigen::Index>(j) * ma + k;
      for (size_t q = 0; q < aoffs.size(); ++q) {
        Eigen::Index col = static_cast<Eigen::Index>(j) * ma + (k + aoffs[q] + ma) % ma;
        a1.emplace_back(row, col, aw1[static_cast<Eigen::Index>(q)]);
        a2.emplace_back(row, col, aw2[static_cast<Eigen::Index>(q)]);
      }
    }
  d_az_.resize(n, n);
  d_az_.setFromTriplets(a1.begin(), a1.end());
  d_az2_.resize(n, n);
  d_az2_.setFromTriplets(a2.begin(), a2.end());

  d_cross_ = (d_psi_ * d_az_).pruned();
}

void CapMesh::finalize_common() {
  const double c = theta_.cos();
  ell_ = 1.0 - c * psi_.array().cos();
}

std::array<double, 3> CapMesh::node_position(Eigen::Index i) const {
  const double c = theta_.cos();
  if (dim_ == 1) return {std::sin(signed_[i]), std::cos(signed_[i]) - c, 0.0};
  double s = std::sin(psi_[i]);
  return {s * std::cos(az_[i]), s * std::sin(az_[i]), std::cos(psi_[i]) - c};
}

void CapMesh::require_field(const ScalarField& g, const char* what) const {
  if (g.size() != size())
    fail(ErrorCode::invalid_argument,
         std::string(what) + ": field length " + std::to_string(g.size()) +
             " does not match mesh size " + std::to_string(size()));
}

double CapMesh::integrate(const ScalarField& g) const {
  require_field(g, "integrate");
  return weighted_sum(g, w_);
}

VectorField CapMesh::gradient(const ScalarField& g) const {
  require_field(g, "gradient");
  VectorField out;
  out.comp_psi = d_psi_ * g;
  if (dim_ == 2) out.comp_az = (d_az_ * g).cwiseProduct(inv_sin_);
  return out;
}

SymMatrixField CapMesh::hessian(const ScalarField& g) const {
  require_field(g, "hessian");
  SymMatrixField out;
  out.dim = dim_;
  if (dim_ == 1) {
    out.m11 = d_psi2_ * g;
    return out;
  }
  Eigen::VectorXd dp = d_psi_ * g;
  Eigen::VectorXd da = d_az_ * g;
  out.m11 = d_psi2_ * g;
  out.m12 = inv_sin_.cwiseProduct(d_cross_ * g) -
            cot_psi_.cwiseProduct(inv_sin_).cwiseProduct(da);
  out.m22 = inv_sin_.cwiseProduct(inv_sin_).cwiseProduct(d_az2_ * g) + cot_psi_.cwiseProduct(dp);
  return out;
}

SymMatrixField CapMesh::area_operator(const ScalarField& g) const {
  SymMatrixField out = hessian(g);
  out.m11 += g;
  if (dim_ == 2) out.m22 += g;
  return out;
}

Eigen::VectorXd CapMesh::normal_derivative(const ScalarField& g) const {
  require_field(g, "normal_derivative");
  Eigen::VectorXd full = d_psi_ * g;
  Eigen::VectorXd out(boundary_ids_.size());
  for (size_t q = 0; q < boundary_ids_.size(); ++q) {
    Eigen::Index id = boundary_ids_[q];
    double v = full[id];
    if (dim_ == 1 && signed_[id] < 0.0) v = -v;  // outward at the left endpoint
    out[static_cast<Eigen::Index>(q)] = v;
  }
  return out;
}

Eigen::VectorXd CapMesh::reflect(const ScalarField& g) const {
  require_field(g, "reflect");
  Eigen::VectorXd out(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) out[i] = g[reflect_[i]];
  return out;
}

Eigen::VectorXd CapMesh::reflect_even(const ScalarField& g) const {
  return 0.5 * (g + reflect(g));
}

double CapMesh::evenness_defect(const ScalarField& g) const {
  return (g - reflect(g)).cwiseAbs().maxCoeff();
}

bool CapMesh::is_even(const ScalarField& g, double tol) const {
  return evenness_defect(g) <= tol;
}

double CapMesh::stencil_error() const {
  if (stencil_error_ < 0.0) {
    SymMatrixField a = area_operator(ell_);
    double err = (a.m11.array() - 1.0).abs().maxCoeff();
    if (dim_ == 2) {
      err = std::max(err, a.m12.cwiseAbs().maxCoeff());
      err = std::max(err, (a.m22.array() - 1.0).abs().maxCoeff());
    }
    stencil_error_ = err;
  }
  return stencil_error_;
}

bool CapMesh::compatible_with(const CapMesh& other) const {
  return dim_ == other.dim_ && theta_.value() == other.theta_.value() &&
         res_psi_ == other.res_psi_ && res_az_ == other.res_az_;
}

// ----------------------------------------------------------------------------

double cap_surface_area(int dim, double theta) {
  if (dim == 1) return 2.0 * theta;
  return 2.0 * kPi * (1.0 - std::cos(theta));
}

double cap_hat_volume(int dim, double theta) {
  double c = std::cos(theta);
  if (dim == 1) return theta - std::sin(theta) * c;
  return kPi / 3.0 * (1.0 - c) * (1.0 - c) * (2.0 + c);
}

double cap_support_integral(int dim, double theta) {
  double c = std::cos(theta), s = std::sin(theta);
  if (dim == 1) return 2.0 * (theta - s * c);
  return 2.0 * kPi * ((1.0 - c) - 0.5 * c * s * s);
}

}  // namespace capillary
