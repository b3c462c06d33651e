#include <doctest.h>

#include <cmath>

#include "core/mesh.hpp"
#include "core/util.hpp"
#include "test_helpers.hpp"

using namespace capillary;
using namespace capillary::testing;

TEST_CASE("hat volume closed forms") {
  // dim 2: (pi/3) (1-cos)^2 (2+cos); dim 1: theta - sin cos.
  for (double theta : {kPi / 6, kThird, kPi / 2, 2.0}) {
    double c = std::cos(theta);
    CHECK(cap_hat_volume(2, theta) ==
          doctest::Approx((kPi / 3.0) * (1 - c) * (1 - c) * (2 + c)).epsilon(1e-14));
    CHECK(cap_hat_volume(1, theta) ==
          doctest::Approx(theta - std::sin(theta) * c).epsilon(1e-14));
  }
  CHECK(cap_hat_volume(2, kThird) == doctest::Approx(5 * kPi / 24).epsilon(1e-14));
  CHECK(cap_hat_volume(2, kPi / 2) == doctest::Approx(2 * kPi / 3).epsilon(1e-14));
}

TEST_CASE("surface area and support integral quadratures") {
  for (double theta : {kPi / 6, kThird, kPi / 2}) {
    MeshPtr m = mesh2(64, 0, theta);
    ScalarField ones = ScalarField::Ones(m->size());
    CHECK(m->integrate(ones) ==
          doctest::Approx(2 * kPi * (1 - std::cos(theta))).epsilon(1e-9));
    CHECK(m->integrate(m->ell()) ==
          doctest::Approx(3 * cap_hat_volume(2, theta)).epsilon(1e-9));
  }
  MeshPtr m1d = mesh1(513, 1.1);
  ScalarField ones = ScalarField::Ones(m1d->size());
  CHECK(m1d->integrate(ones) == doctest::Approx(2 * 1.1).epsilon(1e-10));
  CHECK(m1d->integrate(m1d->ell()) == doctest::Approx(2 * cap_hat_volume(1, 1.1)).epsilon(1e-10));
}

TEST_CASE("quadrature error decays at fourth order") {
  // Smooth non-polynomial integrand with nonzero boundary values.
  auto integrand = [](const CapMesh& m) {
    return (m.polar().array().cos() * (1.5 + m.azimuth().array().cos().square())).matrix().eval();
  };
  // Exact value via a very fine mesh.
  MeshPtr fine = mesh2(768, 1536);
  double reference = fine->integrate(integrand(*fine));
  std::vector<double> spacings, errors;
  for (int rings : {16, 32, 64}) {
    MeshPtr m = mesh2(rings, 2 * rings);
    spacings.push_back(1.0 / rings);
    errors.push_back(std::abs(m->integrate(integrand(*m)) - reference));
  }
  double order = order_fit(spacings, errors);
  CHECK(order > 3.4);
}

TEST_CASE("area operator of ell is the identity at stencil order") {
  std::vector<double> spacings, errors;
  for (int rings : {16, 32, 64}) {
    MeshPtr m = mesh2(rings, 2 * rings);
    spacings.push_back(1.0 / rings);
    errors.push_back(m->stencil_error());
    SymMatrixField a = m->area_operator(m->ell());
    double worst = 0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      worst = std::max(worst, std::abs(a.m11[i] - 1.0));
      worst = std::max(worst, std::abs(a.m22[i] - 1.0));
      worst = std::max(worst, std::abs(a.m12[i]));
    }
    CHECK(worst == doctest::Approx(m->stencil_error()).epsilon(1e-12));
  }
  // One-sided boundary stencils cap the order at three.
  double order = order_fit(spacings, errors);
  CHECK(order > 2.5);
  CHECK(errors.back() < 1e-4);
}

TEST_CASE("polar derivative matches the analytic one for a boundary-compatible mode") {
  MeshPtr m = mesh2(64, 128);
  double theta = m->theta().value();
  ScalarField g = (m->polar() * (kPi / theta)).array().cos().matrix();
  ScalarField expected = (-(kPi / theta)) * (m->polar() * (kPi / theta)).array().sin().matrix();
  ScalarField got = m->d_psi() * g;
  CHECK(max_abs_diff(got, expected) < 5e-5);
}

TEST_CASE("last ring sits exactly at the contact angle") {
  MeshPtr m = mesh2(32, 64, 0.9);
  CHECK(m->polar().maxCoeff() == doctest::Approx(0.9).epsilon(1e-15));
  for (Eigen::Index id : m->boundary_ids()) {
    CHECK(m->is_boundary(id));
    CHECK(m->polar()[id] == doctest::Approx(0.9).epsilon(1e-15));
  }
  MeshPtr line = mesh1(129, 0.9);
  CHECK(line->signed_coord().maxCoeff() == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(line->signed_coord().minCoeff() == doctest::Approx(-0.9).epsilon(1e-15));
  CHECK(line->boundary_ids().size() == 2);
}

TEST_CASE("normal derivative of ell equals sin(theta) cos(theta) on the boundary") {
  for (int dim : {1, 2}) {
    MeshPtr m = dim == 2 ? mesh2(48, 96, 1.1) : mesh1(513, 1.1);
    Eigen::VectorXd nd = m->normal_derivative(m->ell());
    for (Eigen::Index k = 0; k < nd.size(); ++k)
      CHECK(nd[k] == doctest::Approx(std::sin(1.1) * std::cos(1.1)).epsilon(1e-5));
  }
}

TEST_CASE("reflection is an involution and detects odd fields") {
  MeshPtr m = mesh2(24, 48);
  ScalarField even = (2 * m->azimuth()).array().cos().matrix();
  ScalarField odd = m->azimuth().array().sin().matrix();
  CHECK(m->evenness_defect(even) < 1e-14);
  CHECK(m->evenness_defect(odd) > 0.5);
  CHECK(max_abs_diff(m->reflect(m->reflect(odd)), odd) < 1e-15);
  CHECK(m->evenness_defect(m->reflect_even(odd)) < 1e-14);

  MeshPtr line = mesh1(129);
  ScalarField x = line->signed_coord();
  CHECK(line->evenness_defect(x.array().square().matrix()) < 1e-14);
  CHECK(line->evenness_defect(x) > 0.5);
}

TEST_CASE("construction rejects bad arguments") {
  CHECK_THROWS_AS(ContactAngle(0.0), Error);
  CHECK_THROWS_AS(ContactAngle(kPi), Error);
  CHECK_THROWS_AS(ContactAngle(-0.3), Error);
  CHECK_THROWS_AS(CapMesh::build(3, ContactAngle(1.0), 32), Error);
  CHECK_THROWS_AS(CapMesh::build(2, ContactAngle(1.0), 4), Error);
  CHECK_THROWS_AS(CapMesh::build(2, ContactAngle(1.0), 32, 7), Error);
  CHECK_THROWS_AS(CapMesh::build(2, ContactAngle(1.0), 32, 6), Error);
}

TEST_CASE("compatibility requires equal dimension, angle, and resolution") {
  MeshPtr a = mesh2(24, 48);
  MeshPtr b = mesh2(24, 48);
  MeshPtr c = mesh2(32, 64);
  MeshPtr d = mesh2(24, 48, 1.1);
  CHECK(a->compatible_with(*b));
  CHECK(!a->compatible_with(*c));
  CHECK(!a->compatible_with(*d));
  CHECK(!a->compatible_with(*mesh1(129)));
}
