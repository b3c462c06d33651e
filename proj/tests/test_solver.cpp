#include <doctest.h>

#include <cmath>
#include <vector>

#include "core/functionals.hpp"
#include "core/random_bodies.hpp"
#include "core/solver.hpp"
#include "core/util.hpp"
#include "test_helpers.hpp"

using namespace capillary;
using namespace capillary::testing;

namespace {

SolverConfig quiet_config() {
  SolverConfig config;
  config.run_diagnostics = false;
  return config;
}

}  // namespace

TEST_CASE("problem construction rejects everything the solve hypotheses exclude") {
  MeshPtr m = mesh2(16, 32);
  GaugePtr cubic = make_power_gauge(3.0);

  MeshPtr steep = mesh2(16, 32, 2.0);  // above pi/2
  CHECK_THROWS_AS(make_problem(steep, steep->ell(), cubic, ProblemForm::unnormalized), Error);

  CHECK_THROWS_AS(make_problem(nullptr, m->ell(), cubic, ProblemForm::unnormalized), Error);
  CHECK_THROWS_AS(make_problem(m, m->ell(), nullptr, ProblemForm::unnormalized), Error);

  ScalarField negative = -m->ell();
  CHECK_THROWS_AS(make_problem(m, negative, cubic, ProblemForm::unnormalized), Error);

  // Positive but odd in the azimuth.
  ScalarField odd = m->ell();
  for (int i = 0; i < odd.size(); ++i)
    odd[i] *= 1.0 + 0.3 * std::sin(m->polar()[i]) * std::cos(m->azimuth()[i]);
  CHECK_THROWS_AS(make_problem(m, odd, cubic, ProblemForm::unnormalized), Error);

  // The quadratic gauge fails the growth test in dimension 2.
  CHECK_THROWS_AS(make_problem(m, m->ell(), make_power_gauge(2.0), ProblemForm::unnormalized),
                  Error);
}

TEST_CASE("solver config validation catches bad step policies") {
  SolverConfig config;
  config.validate();  // defaults are fine

  SolverConfig bad = config;
  bad.dt_init = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = config;
  bad.dt_max = 1.5;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = config;
  bad.newton_tol = -1e-10;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = config;
  bad.newton_max_iter = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("homotopy data interpolates between the cap data and the target") {
  MeshPtr m = mesh2(16, 32);
  GaugePtr quartic = make_power_gauge(4.0);
  ProblemData data = make_manufactured_problem(m, quartic, 1.3);

  ScalarField start = homotopy_data(data, 0.0);
  ScalarField expected = quartic->value(1.0) * m->ell();
  CHECK(max_abs_diff(start, expected) <= 1e-14);

  ScalarField end = homotopy_data(data, 1.0);
  CHECK(max_abs_diff(end, data.f.values) <= 1e-14);
}

TEST_CASE("the cap solves the t = 0 problem to stencil accuracy") {
  for (MeshPtr m : {mesh2(48, 96), MeshPtr(mesh1(513))}) {
    double p = m->dim() + 2.0;
    ProblemData data = make_manufactured_problem(m, make_power_gauge(p), 1.4);
    ScalarField h = m->ell();
    ResidualEval eval = solver_residual(data, h, 0.0);
    CHECK(eval.norm(h.maxCoeff()) <= 10.0 * m->stencil_error());
    CHECK(eval.min_det > 0.0);
  }
}

TEST_CASE("residual evaluation rejects non-convex or non-positive iterates") {
  MeshPtr m = mesh2(16, 32);
  ProblemData data = make_manufactured_problem(m, make_power_gauge(4.0), 1.0);
  ScalarField h = -m->ell();
  CHECK_THROWS_AS(solver_residual(data, h, 0.0), Error);
}

TEST_CASE("the zero-order coefficient collapses on caps for the critical power") {
  for (MeshPtr m : {mesh2(24, 48), MeshPtr(mesh1(129))}) {
    double n = m->dim();
    ProblemData data = make_manufactured_problem(m, make_power_gauge(n + 1.0), 1.0);
    ScalarField h = m->ell();
    ScalarField coeff = zero_order_coefficient(data, h, 0.0, 1.0);
    for (int i = 0; i < coeff.size(); ++i)
      CHECK(coeff[i] == doctest::Approx(-n / m->ell()[i]).epsilon(1e-12));
  }
}

TEST_CASE("the cofactor rows are the determinant-weighted newton rows at a solution") {
  MeshPtr m = mesh2(24, 48);
  double r = 1.3;
  ProblemData data = make_manufactured_problem(m, make_power_gauge(4.0), r);
  ScalarField h = r * m->ell();  // exact discrete solution of the manufactured data

  SpMat newton = assemble_linearized(data, h, 1.0, 1.0, LinearizedKind::newton_log);
  SpMat cofactor = assemble_linearized(data, h, 1.0, 1.0, LinearizedKind::cofactor_robin);

  BodyPtr cap = make_body_from_support(m, h);
  ScalarField det = cap->area_det();
  Eigen::VectorXd weights = det;
  for (Eigen::Index b : m->boundary_ids()) weights[b] = 1.0;  // Robin rows agree as written

  SpMat scaled = weights.asDiagonal() * newton;
  double scale = 0.0;
  for (int k = 0; k < cofactor.outerSize(); ++k)
    for (SpMat::InnerIterator it(cofactor, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
  SpMat diff = cofactor - scaled;
  double worst = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k)
    for (SpMat::InnerIterator it(diff, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
  CHECK(worst <= 1e-9 * scale);
}

TEST_CASE("newton polishes a nearby start onto the manufactured solution") {
  MeshPtr m = mesh2(32, 64);
  ProblemData data = make_manufactured_problem(m, make_power_gauge(4.0), 1.3);
  ScalarField h = 1.25 * m->ell();
  double lambda = 1.0;
  NewtonRecord record = newton_solve(data, h, 1.0, lambda, quiet_config());
  CHECK(record.converged);
  CHECK(record.final_residual <= 1e-9);
  CHECK(record.iterations <= 20);
  // Residuals close monotonically once the iteration settles.
  CHECK(record.residual_history.back() <= record.residual_history.front());
  CHECK(max_abs_diff(h, 1.3 * m->ell()) <= 50.0 * m->stencil_error());
}

TEST_CASE("the directional jacobian check stays quiet through a solve") {
  MeshPtr m = mesh2(24, 48);
  ProblemData data = make_manufactured_problem(m, make_power_gauge(4.0), 1.3);
  ScalarField h = 1.2 * m->ell();
  double lambda = 1.0;
  SolverConfig config = quiet_config();
  config.fd_check_every = 1;
  NewtonRecord record = newton_solve(data, h, 1.0, lambda, config);
  CHECK(record.converged);
  CHECK(record.fd_jacobian_error >= 0.0);
  CHECK(record.fd_jacobian_error <= 1e-3);
}

TEST_CASE("homotopy recovers the manufactured cap") {
  MeshPtr m = mesh2(32, 64);
  double r = 1.3;
  ProblemData data = make_manufactured_problem(m, make_power_gauge(4.0), r);
  SolveReport report = homotopy_solve(data, quiet_config());
  REQUIRE(report.converged);
  CHECK(report.stall_reason.empty());
  CHECK(report.final_residual <= 1e-8);
  REQUIRE(report.body != nullptr);

  ScalarField u = report.body->capillary_support();
  CHECK((u.array() - r).abs().maxCoeff() <= 50.0 * m->stencil_error());
  double hat = cap_hat_volume(m->dim(), m->theta().value());
  CHECK(report.volume == doctest::Approx(r * r * r * hat).epsilon(1e-5));

  // Continuation times are strictly increasing and end at 1.
  REQUIRE(!report.steps.empty());
  for (size_t k = 1; k < report.steps.size(); ++k)
    CHECK(report.steps[k].t > report.steps[k - 1].t);
  CHECK(report.steps.back().t == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("step size capping does not move the answer") {
  MeshPtr m = mesh2(24, 48);
  ProblemData data = make_manufactured_problem(m, make_power_gauge(4.0), 1.3);
  SolverConfig coarse = quiet_config();
  SolverConfig fine = quiet_config();
  fine.dt_max = 0.25;
  fine.dt_init = 0.125;
  SolveReport a = homotopy_solve(data, coarse);
  SolveReport b = homotopy_solve(data, fine);
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  CHECK(b.steps.size() > a.steps.size());
  CHECK(max_abs_diff(a.body->support(), b.body->support()) <= 1e-7);
}

TEST_CASE("the normalized equality case lands on the unit-volume cap") {
  MeshPtr m = mesh2(48, 96);
  ProblemData data = make_equality_case_problem(m, make_power_gauge(3.0));
  CHECK(data.scale_invariant);
  CHECK(std::abs(check_admissibility(data).margin) <= 1e-8);

  SolveReport report = homotopy_solve(data, quiet_config());
  REQUIRE(report.converged);
  REQUIRE(report.body != nullptr);
  CHECK(report.scale_invariant);
  CHECK(std::abs(report.admissibility_margin) <= 1e-8);
  CHECK(std::abs(report.volume - 1.0) <= 1e-6);
  CHECK(std::abs(volume(*report.body) - 1.0) <= 1e-6);

  double rho = std::pow(cap_hat_volume(m->dim(), m->theta().value()), -1.0 / 3.0);
  ScalarField u = report.body->capillary_support();
  CHECK((u.array() - rho).abs().maxCoeff() <= 1e-3);
}

TEST_CASE("scale-invariant data is solved to a cap of constant capillary support") {
  MeshPtr m = mesh2(32, 64);
  ProblemData data = make_manufactured_problem(m, make_power_gauge(3.0), 1.5);
  CHECK(data.scale_invariant);
  SolveReport report = homotopy_solve(data, quiet_config());
  REQUIRE(report.converged);
  ScalarField u = report.body->capillary_support();
  CHECK(u.maxCoeff() - u.minCoeff() <= 50.0 * m->stencil_error());
}

TEST_CASE("a starved newton budget stalls honestly instead of faking progress") {
  MeshPtr m = mesh2(16, 32);
  ProblemData data = make_manufactured_problem(m, make_power_gauge(4.0), 1.3);
  SolverConfig config = quiet_config();
  config.newton_max_iter = 1;
  config.dt_min = 0.1;
  SolveReport report = homotopy_solve(data, config);
  CHECK(!report.converged);
  CHECK(!report.stall_reason.empty());
  CHECK(report.last_good_t < 1.0);
  // The last accepted iterate is still a usable body.
  CHECK(report.body != nullptr);
}

TEST_CASE("robin projection pins the boundary rows exactly") {
  for (MeshPtr m : {mesh2(24, 48), MeshPtr(mesh1(129))}) {
    SplitMix64 rng(51);
    ScalarField v = random_even_field(rng, *m);
    ScalarField w = project_to_robin(*m, v);
    Eigen::VectorXd rows = m->normal_derivative(w);
    double cot = m->theta().cot();
    const auto& ids = m->boundary_ids();
    for (size_t k = 0; k < ids.size(); ++k)
      CHECK(std::abs(rows[static_cast<Eigen::Index>(k)] - cot * w[ids[k]]) <=
            1e-10 * (1.0 + std::abs(w[ids[k]])));
    // Interior values are untouched.
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (!m->is_boundary(i)) CHECK(w[i] == v[i]);
  }
}

TEST_CASE("the linearized operator is symmetric on robin-compatible fields") {
  MeshPtr m = mesh2(48, 96);
  ProblemData data = make_manufactured_problem(m, make_power_gauge(3.0), 1.0);
  ScalarField h = m->ell();
  SplitMix64 rng(53);
  ScalarField v = project_to_robin(*m, random_even_field(rng, *m));
  ScalarField w = project_to_robin(*m, random_even_field(rng, *m));
  double defect = symmetry_defect(data, h, 0.0, 1.0, v, w);
  CHECK(defect >= 0.0);
  CHECK(defect <= 1e-3);
}

TEST_CASE("orthogonality diagnostics see the critical-power weight collapse") {
  MeshPtr m = mesh2(24, 48);
  SolverConfig config;

  ProblemData critical = make_manufactured_problem(m, make_power_gauge(3.0), 1.0);
  OrthogonalityReport at_critical =
      orthogonality_diagnostic(critical, m->ell(), 0.0, 1.0, config);
  CHECK(at_critical.weight_sign == "zero");
  CHECK(std::abs(at_critical.weight_min) <= 1e-12);
  CHECK(std::abs(at_critical.weight_max) <= 1e-12);
  REQUIRE(!at_critical.vectors.empty());
  for (const KernelVectorReport& vec : at_critical.vectors) CHECK(vec.sigma >= 0.0);

  ProblemData above = make_manufactured_problem(m, make_power_gauge(4.0), 1.0);
  OrthogonalityReport report = orthogonality_diagnostic(above, m->ell(), 0.0, 1.0, config);
  CHECK(report.weight_sign == "positive");
  CHECK(report.weight_min == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("problem form names round-trip") {
  CHECK(problem_form_from_name(problem_form_name(ProblemForm::normalized)) ==
        ProblemForm::normalized);
  CHECK(problem_form_from_name(problem_form_name(ProblemForm::unnormalized)) ==
        ProblemForm::unnormalized);
  CHECK_THROWS_AS(problem_form_from_name("diagonal"), Error);
}

TEST_CASE("homogeneity detection distinguishes powers from sums") {
  CHECK(gauge_homogeneity_degree(*make_power_gauge(3.0)) == doctest::Approx(3.0));
  CHECK(gauge_homogeneity_degree(*make_power_gauge(4.5)) == doctest::Approx(4.5));
  CHECK(!gauge_homogeneity_degree(*make_power_sum_gauge({{1.0, 3.0}, {1.0, 4.0}})).has_value());
}
