#include <doctest.h>

#include <cmath>

#include "core/combination.hpp"
#include "core/functionals.hpp"
#include "core/random_bodies.hpp"
#include "core/util.hpp"
#include "test_helpers.hpp"

using namespace capillary;
using namespace capillary::testing;

TEST_CASE("combining caps gives the cap with the power-mean radius") {
  MeshPtr m = mesh2(32, 64);
  BodyPtr K = make_cap(m, 0.9);
  BodyPtr L = make_cap(m, 1.4);
  for (double p : {1.0, 2.0, 3.0}) {
    CombinationSpec spec{make_power_gauge(p), 0.3, 0.7};
    BodyPtr M = combine(spec, *K, *L);
    double radius = std::pow(0.3 * std::pow(0.9, p) + 0.7 * std::pow(1.4, p), 1.0 / p);
    CHECK(max_abs_diff(M->support(), (radius * m->ell()).eval()) < 1e-12);
    CHECK(combination_root_residual(spec, *K, *L, *M) <= 1e-11);
  }
}

TEST_CASE("degree-one combination is the weighted support sum") {
  MeshPtr m = mesh2(32, 64);
  BodyPtr K = perturbed_cap(m, perturbation_mode(*m, "cos1"), 0.3);
  BodyPtr L = perturbed_cap(m, perturbation_mode(*m, "az2"), 0.4);
  CombinationSpec spec{make_power_gauge(1.0), 0.25, 0.75};
  BodyPtr M = combine(spec, *K, *L);
  ScalarField expected = 0.25 * K->support() + 0.75 * L->support();
  CHECK(max_abs_diff(M->support(), expected) < 1e-11);
}

TEST_CASE("root residual contract holds on generic pairs") {
  MeshPtr m = mesh2(32, 64);
  SplitMix64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    BodyPtr K = random_body(rng, m);
    BodyPtr L = random_body(rng, m);
    CombinationSpec spec{make_power_sum_gauge({{1.0, 3.0}, {1.0, 4.0}}), 0.6, 0.4};
    BodyPtr M = combine(spec, *K, *L);
    CHECK(combination_root_residual(spec, *K, *L, *M) <= 1e-11);
    CHECK(validate(*M).pass);
  }
}

TEST_CASE("vanishing weight returns the surviving body") {
  MeshPtr m = mesh2(24, 48);
  BodyPtr K = make_cap(m, 0.8);
  BodyPtr L = perturbed_cap(m, perturbation_mode(*m, "cos2"), 0.3);
  BodyPtr M = combine({make_power_gauge(3.0), 0.0, 1.0}, *K, *L);
  CHECK(max_abs_diff(M->support(), L->support()) < 1e-12);
}

TEST_CASE("combination rejects bad weights, gauges, and meshes") {
  MeshPtr m = mesh2(24, 48);
  BodyPtr K = make_cap(m, 1.0);
  BodyPtr L = make_cap(m, 1.2);
  CHECK_THROWS_AS(combine({nullptr, 1.0, 1.0}, *K, *L), Error);
  CHECK_THROWS_AS(combine({make_power_gauge(3.0), -0.1, 1.0}, *K, *L), Error);
  CHECK_THROWS_AS(combine({make_power_gauge(3.0), 0.0, 0.0}, *K, *L), Error);
  BodyPtr other = make_cap(mesh2(32, 64), 1.0);
  CHECK_THROWS_AS(combine({make_power_gauge(3.0), 1.0, 1.0}, *K, *other), Error);
}

TEST_CASE("perturb is the weight-(1, eps) combination") {
  MeshPtr m = mesh2(24, 48);
  BodyPtr K = perturbed_cap(m, perturbation_mode(*m, "cos1"), 0.2);
  BodyPtr L = make_cap(m, 1.3);
  GaugePtr phi = make_power_gauge(3.0);
  BodyPtr direct = perturb(*phi, *K, *L, 0.35);
  BodyPtr via_combine = combine({phi, 1.0, 0.35}, *K, *L);
  CHECK(max_abs_diff(direct->support(), via_combine->support()) < 1e-14);
  // eps = 0 is the identity.
  CHECK(max_abs_diff(perturb(*phi, *K, *L, 0.0)->support(), K->support()) < 1e-12);
}

TEST_CASE("perturbation derivative matches caps in closed form") {
  MeshPtr m = mesh2(32, 64);
  BodyPtr K = make_cap(m, 1.0);
  BodyPtr L = make_cap(m, 1.3);
  // For unit-normalized gauges the derivative is h phi(h_L/h)/phi'(1); on
  // caps d/deps (1 + eps r^3)^(1/3) = r^3/3 at eps = 0.
  ScalarField deriv = perturbation_derivative(*make_power_gauge(3.0), *K, *L);
  ScalarField expected = (std::pow(1.3, 3) / 3.0) * m->ell();
  CHECK(max_abs_diff(deriv, expected) < 1e-12);
}

TEST_CASE("perturbation derivative matches finite differences") {
  MeshPtr m = mesh2(24, 48);
  SplitMix64 rng(3);
  BodyPtr K = random_body(rng, m);
  BodyPtr L = random_body(rng, m);
  for (GaugePtr phi : {make_power_gauge(3.0), make_power_sum_gauge({{1.0, 3.0}, {1.0, 4.0}})}) {
    ScalarField deriv = perturbation_derivative(*phi, *K, *L);
    // Richardson extrapolation of one-sided differences.
    double e1 = 1e-4, e2 = 5e-5;
    ScalarField d1 = (perturb(*phi, *K, *L, e1)->support() - K->support()) / e1;
    ScalarField d2 = (perturb(*phi, *K, *L, e2)->support() - K->support()) / e2;
    ScalarField fd = (e1 * d2 - e2 * d1) / (e1 - e2);
    CHECK(max_abs_diff(fd, deriv) < 1e-6 * deriv.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("combined bodies pass validation across gauges and weights") {
  MeshPtr m = mesh2(24, 48);
  BodyPtr K = perturbed_cap(m, perturbation_mode(*m, "az2"), 0.5);
  BodyPtr L = perturbed_cap(m, perturbation_mode(*m, "cos2"), 0.5);
  for (double alpha : {0.2, 1.0}) {
    for (double beta : {0.5, 2.0}) {
      BodyPtr M = combine({make_power_gauge(3.0), alpha, beta}, *K, *L);
      CHECK(validate(*M).pass);
    }
  }
}
