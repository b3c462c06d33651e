#include <doctest.h>

#include <cmath>

#include "core/body.hpp"
#include "core/functionals.hpp"
#include "core/random_bodies.hpp"
#include "core/util.hpp"
#include "test_helpers.hpp"

using namespace capillary;
using namespace capillary::testing;

TEST_CASE("cap volumes match the closed forms") {
  for (double theta : {kPi / 6, kThird, kPi / 2}) {
    MeshPtr m = mesh2(96, 192, theta);
    for (double r : {0.7, 1.0, 1.6}) {
      double expected = std::pow(r, 3) * cap_hat_volume(2, theta);
      CHECK(volume(*make_cap(m, r)) == doctest::Approx(expected).epsilon(1e-7));
    }
  }
  MeshPtr line = mesh1(1025, 1.2);
  for (double r : {0.7, 1.3}) {
    double expected = r * r * cap_hat_volume(1, 1.2);
    CHECK(volume(*make_cap(line, r)) == doctest::Approx(expected).epsilon(1e-8));
  }
}

TEST_CASE("cap wetting energy matches the closed form") {
  MeshPtr m = mesh2(64, 128);
  for (double r : {0.8, 1.5}) {
    CHECK(wetting_energy(*make_cap(m, r)) ==
          doctest::Approx(r * r * 3 * cap_hat_volume(2, kThird)).epsilon(1e-7));
  }
  MeshPtr line = mesh1(513);
  CHECK(wetting_energy(*make_cap(line, 1.4)) ==
        doctest::Approx(1.4 * 2 * cap_hat_volume(1, kThird)).epsilon(1e-8));
}

TEST_CASE("volume is invariant under horizontal translation") {
  MeshPtr m = mesh2(48, 96);
  BodyPtr body = perturbed_cap(m, perturbation_mode(*m, "cos2"), 0.4);
  BodyPtr moved = translate_horizontal(*body, {0.1, -0.07});
  CHECK(volume(*moved) == doctest::Approx(volume(*body)).epsilon(1e-10));
  CHECK(wetting_energy(*moved) == doctest::Approx(wetting_energy(*body)).epsilon(1e-10));
}

TEST_CASE("volume scales at degree n+1 and wetting at degree n") {
  MeshPtr m = mesh2(32, 64);
  BodyPtr body = perturbed_cap(m, perturbation_mode(*m, "az2"), 0.5);
  double v = volume(*body);
  double w = wetting_energy(*body);
  BodyPtr big = body->scaled(1.7);
  CHECK(volume(*big) == doctest::Approx(std::pow(1.7, 3) * v).epsilon(1e-12));
  CHECK(wetting_energy(*big) == doctest::Approx(1.7 * 1.7 * w).epsilon(1e-12));
}

TEST_CASE("densities integrate to their defining totals") {
  MeshPtr m = mesh2(32, 64);
  BodyPtr body = perturbed_cap(m, perturbation_mode(*m, "cos1"), 0.3);
  const ScalarField& h = body->support();
  const ScalarField& det = body->area_det();
  const ScalarField& ell = m->ell();

  MeasureDensity surf = surface_density(*body);
  CHECK(surf.total() == doctest::Approx(m->integrate(ell.cwiseProduct(det))).epsilon(1e-13));
  CHECK(surf.total() == doctest::Approx(wetting_energy(*body)).epsilon(1e-13));

  MeasureDensity lp = lp_density(*body, 2.5);
  ScalarField lp_ref = ell.cwiseProduct(h.array().pow(-1.5).matrix()).cwiseProduct(det);
  CHECK(lp.total() == doctest::Approx(m->integrate(lp_ref)).epsilon(1e-13));
  CHECK(lp.exponent == doctest::Approx(2.5));

  GaugePtr p3 = make_power_gauge(3.0);
  MeasureDensity orl = orlicz_density(*body, p3);
  ScalarField orl_ref =
      (ell.array() / h.array()).pow(3.0).matrix().cwiseProduct(h).cwiseProduct(det);
  CHECK(orl.total() == doctest::Approx(m->integrate(orl_ref)).epsilon(1e-13));

  MeasureDensity cone = cone_volume_density(*body);
  CHECK(cone.total() ==
        doctest::Approx(m->integrate(ell.cwiseProduct(h).cwiseProduct(det)) / 3.0).epsilon(1e-13));

  nlohmann::json j = surf.describe();
  CHECK(j["kind"] == "surface");
}

TEST_CASE("lp density with exponent one is the surface density") {
  MeshPtr m = mesh2(24, 48);
  BodyPtr body = make_cap(m, 1.3);
  CHECK(max_abs_diff(lp_density(*body, 1.0).values, surface_density(*body).values) < 1e-14);
}

TEST_CASE("mixed discriminant generalizes the determinant") {
  Eigen::MatrixXd a(2, 2), b(2, 2);
  a << 3.0, 1.0, 1.0, 2.0;
  b << 1.0, -0.5, -0.5, 4.0;
  CHECK(mixed_discriminant({a, a}) == doctest::Approx(a.determinant()).epsilon(1e-14));
  CHECK(mixed_discriminant({b, b}) == doctest::Approx(b.determinant()).epsilon(1e-14));
  CHECK(mixed_discriminant({a, b}) == doctest::Approx(mixed_discriminant({b, a})).epsilon(1e-14));
  // Polarization: det(a+b) = det a + 2 Q(a,b) + det b in dimension two.
  Eigen::MatrixXd s = a + b;
  CHECK(mixed_discriminant({a, b}) ==
        doctest::Approx(0.5 * (s.determinant() - a.determinant() - b.determinant()))
            .epsilon(1e-13));
  Eigen::MatrixXd one(1, 1);
  one << 7.0;
  CHECK(mixed_discriminant({one}) == doctest::Approx(7.0));
}

TEST_CASE("first mixed volume agrees with volume on the diagonal") {
  MeshPtr m = mesh2(32, 64);
  BodyPtr K = perturbed_cap(m, perturbation_mode(*m, "cos2"), 0.4);
  BodyPtr L = make_cap(m, 1.2);
  CHECK(v1(*K, *K) == doctest::Approx(volume(*K)).epsilon(1e-12));
  // Linearity in the second slot.
  CHECK(v1(*K, (2.0 * L->support()).eval()) == doctest::Approx(2 * v1(*K, *L)).epsilon(1e-12));
  ScalarField mix = 0.5 * K->support() + 0.5 * L->support();
  CHECK(v1(*K, mix) ==
        doctest::Approx(0.5 * v1(*K, *K) + 0.5 * v1(*K, *L)).epsilon(1e-12));
}

TEST_CASE("diagonal orlicz mixed volume is phi(1) times the volume") {
  MeshPtr m = mesh2(32, 64);
  BodyPtr K = perturbed_cap(m, perturbation_mode(*m, "az2"), 0.4);
  GaugePtr sum = make_power_sum_gauge({{1.0, 3.0}, {1.0, 4.0}});
  CHECK(orlicz_mixed_volume(*sum, *K, *K) ==
        doctest::Approx(sum->value(1.0) * volume(*K)).epsilon(1e-12));
  CHECK(orlicz_mixed_volume(*make_power_gauge(3.0), *K, *K) ==
        doctest::Approx(volume(*K)).epsilon(1e-12));
}

TEST_CASE("mixed volume with identical slots collapses to the volume") {
  MeshPtr m = mesh2(24, 48);
  BodyPtr K = make_cap(m, 1.1);
  double direct = mixed_volume(*m, K->support(), {K->support(), K->support()});
  CHECK(direct == doctest::Approx(volume(*K)).epsilon(1e-12));
}

TEST_CASE("mixed quantities reject meshes that do not match") {
  MeshPtr a = mesh2(24, 48);
  MeshPtr b = mesh2(32, 64);
  BodyPtr K = make_cap(a, 1.0);
  BodyPtr L = make_cap(b, 1.0);
  CHECK_THROWS_AS(v1(*K, *L), Error);
  CHECK_THROWS_AS(orlicz_mixed_volume(*make_power_gauge(3.0), *K, *L), Error);
}

TEST_CASE("support and curvature formulations of the volume agree") {
  // The same smooth shape sampled on a refinement ladder, so the residuals
  // are comparable across meshes.
  BodyRecipe recipe = BodyRecipe::perturbed(1.0, {0.05}, {0.02});
  std::vector<double> spacings, errors;
  for (int rings : {16, 32, 64}) {
    MeshPtr m = mesh2(rings, 2 * rings);
    spacings.push_back(1.0 / rings);
    errors.push_back(uform_residual(*recipe.realize(m)));
  }
  CHECK(errors.back() < 1e-3);
  CHECK(order_fit(spacings, errors) > 1.8);
}
