#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "body.hpp"
#include "functionals.hpp"
#include "orlicz.hpp"

namespace capillary {

// Which equation a solve targets. Both prescribe the density
// phi(ell/h) * h * det(W) against the data f; the normalized form divides the
// left side by lambda = V(h), so the solution is volume-consistent and the
// data only needs to be correct up to that factor.
enum class ProblemForm { unnormalized, normalized };

std::string problem_form_name(ProblemForm form);
ProblemForm problem_form_from_name(const std::string& name);

// Degree d with phi(s*x) = s^d * phi(x) when phi is homogeneous (detected
// analytically for powers, by sampling x*phi'/phi otherwise); empty when the
// scaling exponent is not constant.
std::optional<double> gauge_homogeneity_degree(const OrliczGauge& phi);

// A solve instance. `f` is a raw data density on the mesh (positive, even);
// `scale_invariant` is true when the gauge is homogeneous of degree n+1,
// which makes the interior equation invariant under rescaling h. The Newton
// system is then rank deficient by one and is closed with a scale-fixing
// bordered row (and, for the normalized form, lambda joins the unknowns).
struct ProblemData {
  MeshPtr mesh;
  MeasureDensity f;
  GaugePtr phi;
  ProblemForm form = ProblemForm::unnormalized;
  bool scale_invariant = false;
};

// Validates everything: f positive and even, contact angle below pi/2, gauge
// passes the membership checks for this dimension. Throws on violation.
ProblemData make_problem(MeshPtr mesh, ScalarField f_values, GaugePtr phi, ProblemForm form);

// f = phi(1/r) * r^(n+1) * ell, the data whose unnormalized solution is the
// cap of radius r exactly.
ProblemData make_manufactured_problem(MeshPtr mesh, GaugePtr phi, double radius,
                                      ProblemForm form = ProblemForm::unnormalized);

// The borderline-admissible data f = phi(1/rho) * rho^(n+1) * ell with
// rho = |cap hat volume|^(-1/(n+1)); the normalized solution is the cap
// scaled to unit enclosed volume and the admissibility margin is zero.
ProblemData make_equality_case_problem(MeshPtr mesh, GaugePtr phi);

// margin = integral(f)/(n+1) - phi(|cap hat volume|^(1/(n+1))), the surplus
// of the data mass over the solvability threshold (closed-form reference
// volume). Reported, never enforced: data below the threshold may still admit
// solutions, the condition is sufficient only.
struct AdmissibilityReport {
  double integral = 0.0;
  double threshold = 0.0;
  double margin = 0.0;
  double min_f = 0.0;
  bool positive = false;
  double evenness_defect = 0.0;
  bool even = false;
  bool pass = false;

  nlohmann::json to_json() const;
};

AdmissibilityReport check_admissibility(const ProblemData& data);

struct SolverConfig {
  // Homotopy step policy for f_t = (1-t)*phi(1)*ell + t*f.
  double dt_init = 0.25;
  double dt_min = 1e-4;
  double dt_grow = 2.0;
  double dt_shrink = 0.5;
  double dt_max = 0.5;

  // Newton on the log residual.
  int newton_max_iter = 30;
  double newton_tol = 1e-10;
  double line_search_shrink = 0.5;
  int line_search_max = 25;
  // Trial steps must keep every nodewise det(W) and trace(W) above this
  // floor (and h positive); offending steps are halved.
  double psd_floor = 1e-14;

  bool project_even = true;

  // Outer volume-consistency iteration for the normalized form.
  double normalization_tol = 1e-11;
  int normalization_max_iter = 60;
  double normalization_damping = 0.6;

  // Scale-invariant gauges leave a one-dimensional inconsistency the Newton
  // iteration cannot remove; accept stagnation once the residual is below
  // this multiple of the mesh stencil error.
  double stall_accept_factor = 50.0;

  // Directional finite-difference check of the Jacobian every this many
  // Newton steps (0 disables); recorded, never enforced.
  int fd_check_every = 10;

  bool run_diagnostics = true;
  // Absolute singular-value threshold below which a spectral vector of the
  // linearized operator counts as near-kernel in the diagnostics.
  double kernel_tol = 1e-5;

  void validate() const;  // throws on non-positive tolerances or dt outside (0,1]
  nlohmann::json to_json() const;
};

// f_t = (1-t) * phi(1) * ell + t * f.
ScalarField homotopy_data(const ProblemData& data, double t);

// Interior rows: log det W + log h + log phi(ell/h) - log(lambda * f_t),
// zeroed at boundary slots. Boundary rows: normal_derivative(h) - cot(theta)*h
// in boundary_ids order. lambda is 1 for the unnormalized form.
struct ResidualEval {
  ScalarField interior;
  Eigen::VectorXd boundary;
  double min_det = 0.0;
  double min_trace = 0.0;

  // max(|interior|, |boundary| / h_scale); the boundary rows carry units of h.
  double norm(double h_scale) const;
};

// Throws (with node id and smallest eigenvalue) when W fails positive
// definiteness or h fails positivity somewhere.
ResidualEval solver_residual(const ProblemData& data, const ScalarField& h, double t,
                             double lambda = 1.0);

// newton_log: Jacobian of the log residual, Robin rows at the boundary.
// cofactor_robin: the linearization of the non-log residual, interior rows
//   c(W):A[v] + (1 - ell*phi'/(h*phi)) * lambda*f_t/(h^2*phi) * v, Robin rows
//   at the boundary. Equals diag(det W) * newton_log on interior rows at a
//   solution.
// cofactor_full: the cofactor-form rows at every node, no Robin replacement;
//   used for the symmetry diagnostics where test fields already satisfy the
//   discrete Robin condition.
enum class LinearizedKind { newton_log, cofactor_robin, cofactor_full };

SpMat assemble_linearized(const ProblemData& data, const ScalarField& h, double t, double lambda,
                          LinearizedKind kind);

// The field (1 - ell*phi'/(h*phi)) * lambda*f_t/(h^2*phi) multiplying v in the
// cofactor-form linearization.
ScalarField zero_order_coefficient(const ProblemData& data, const ScalarField& h, double t,
                                   double lambda);

struct NewtonRecord {
  std::vector<double> residual_history;  // norms, including the entry residual
  int iterations = 0;
  bool converged = false;
  // True when a scale-invariant solve stagnated below the stencil-error floor
  // and was accepted at its best reachable residual.
  bool floor_accepted = false;
  double final_residual = 0.0;

  // Monitors at exit (observed magnitudes, never enforced bounds).
  double min_h = 0.0;
  double min_eig = 0.0;
  double max_gradient = 0.0;
  double max_hessian = 0.0;

  // Worst relative error of the directional finite-difference Jacobian
  // checks; -1 when none ran.
  double fd_jacobian_error = -1.0;

  std::string note;  // non-empty on failures the record can explain

  nlohmann::json to_json() const;
};

// Damped Newton with backtracking line search on the residual norm, evenness
// projection of the step (when configured), positivity/PSD safeguards, and a
// bordered scale-fixing row for scale-invariant gauges. For the normalized
// form lambda is frozen unless the gauge is scale invariant, in which case
// log lambda joins the unknowns and h is rescaled at exit so V(h) = lambda.
// Non-convergence is reported through the record, not thrown.
NewtonRecord newton_solve(const ProblemData& data, ScalarField& h, double t, double& lambda,
                          const SolverConfig& config);

// Overwrites boundary values so the discrete Robin rows hold exactly.
ScalarField project_to_robin(const CapMesh& mesh, ScalarField v);

// |<v, L w> - <w, L v>| / (|v| |w|) in the quadrature inner product, with L
// the cofactor-form linearization on all rows. Vanishes analytically for
// fields satisfying the Robin condition; at stencil order discretely.
double symmetry_defect(const ProblemData& data, const ScalarField& h, double t, double lambda,
                       const ScalarField& v, const ScalarField& w);

// One near-kernel candidate of the linearized operator: its weighted singular
// value and the three quadratures that the orthogonality condition relates.
struct KernelVectorReport {
  double sigma = 0.0;
  // integral of (ell*phi'/(h*phi) - n - 1) * f * v / (h * phi)
  double constraint_integral = 0.0;
  // integral of h * v
  double support_pairing = 0.0;
  // integral of (ell*phi'/(h*phi) - n - 1) * v * det W
  double determinant_pairing = 0.0;
  bool below_tol = false;

  nlohmann::json to_json() const;
};

struct OrthogonalityReport {
  // The weight field ell*phi'(ell/h)/(h*phi(ell/h)) - (n+1); identically zero
  // exactly when the gauge is homogeneous of degree n+1.
  double weight_min = 0.0;
  double weight_max = 0.0;
  std::string weight_sign;  // "zero", "positive", "negative", or "mixed"

  double symmetry_defect = 0.0;
  std::vector<KernelVectorReport> vectors;

  nlohmann::json to_json() const;
};

// Smallest weighted singular vectors of the cofactor-form linearization (with
// Robin rows), their orthogonality quadratures, the weight field's sign
// pattern, and a measured symmetry defect. Reporting only.
OrthogonalityReport orthogonality_diagnostic(const ProblemData& data, const ScalarField& h,
                                             double t, double lambda, const SolverConfig& config);

struct HomotopyStep {
  double t = 0.0;
  double dt = 0.0;
  int newton_iterations = 0;
  std::vector<double> residual_history;
  double final_residual = 0.0;
  double lambda = 1.0;
  double volume = 0.0;
  double min_h = 0.0;
  double min_eig = 0.0;
  double max_gradient = 0.0;
  double max_hessian = 0.0;
  bool floor_accepted = false;

  nlohmann::json to_json() const;
};

struct SolveReport {
  BodyPtr body;  // null when no positive final support was reached
  bool converged = false;
  std::string stall_reason;  // empty on success
  double last_good_t = 0.0;
  double final_residual = 0.0;
  std::vector<HomotopyStep> steps;
  double volume = 0.0;
  double lambda = 1.0;
  bool scale_invariant = false;
  double admissibility_margin = 0.0;
  std::optional<OrthogonalityReport> diagnostics;

  nlohmann::json to_json() const;
};

// Adaptive continuation 0 -> 1 in t with Newton correction at each step,
// starting from the exact t=0 solution (h = ell, or c*ell with
// c = 1/phi^{-1}(phi(1)*|cap hat volume|) for the normalized form). Step
// failures shrink dt; underflow below dt_min returns converged = false with
// the last good t. For the normalized form every accepted step is iterated to
// volume consistency |V(h) - lambda| <= tol * lambda.
SolveReport homotopy_solve(const ProblemData& data, const SolverConfig& config);

}  // namespace capillary
