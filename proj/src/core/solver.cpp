#include "solver.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "random_bodies.hpp"

namespace capillary {

namespace {

using json = nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

SpMat diagonal_matrix(const Eigen::VectorXd& d) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(d.size()));
  for (Eigen::Index i = 0; i < d.size(); ++i) trips.emplace_back(i, i, d[i]);
  SpMat out(d.size(), d.size());
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

// Mesh-bound pieces of the linearized systems that never change across
// Newton iterations: area-operator component matrices (A[g]_ab = m_ab * g),
// the Robin boundary rows, and the interior row selector.
struct Workspace {
  const ProblemData* data = nullptr;
  MeshPtr mesh;
  Eigen::Index n = 0;
  int dim = 0;
  SpMat m11, m12, m22;
  SpMat robin;
  Eigen::VectorXd selector;  // 1 on interior rows, 0 on boundary rows
  double stencil = 0.0;

  Eigen::SparseLU<SpMat> lu_plain;
  bool plain_analyzed = false;
  Eigen::SparseLU<SpMat> lu_border;
  bool border_analyzed = false;
};

// Fills in place: the factorization members pin Workspace in memory.
void build_workspace(const ProblemData& data, Workspace& ws) {
  ws.data = &data;
  ws.mesh = data.mesh;
  const CapMesh& mesh = *data.mesh;
  ws.n = mesh.size();
  ws.dim = mesh.dim();
  ws.stencil = mesh.stencil_error();

  SpMat identity(ws.n, ws.n);
  identity.setIdentity();
  if (ws.dim == 1) {
    ws.m11 = mesh.d_psi2() + identity;
  } else {
    ws.m11 = mesh.d_psi2() + identity;
    ws.m12 = SpMat(mesh.inv_sin().asDiagonal() * mesh.d_cross()) -
             SpMat(mesh.cot_psi().cwiseProduct(mesh.inv_sin()).asDiagonal() * mesh.d_az());
    ws.m22 = SpMat(mesh.inv_sin().cwiseAbs2().asDiagonal() * mesh.d_az2()) +
             SpMat(mesh.cot_psi().asDiagonal() * mesh.d_psi()) + identity;
  }

  Eigen::SparseMatrix<double, Eigen::RowMajor> dpsi_rows(mesh.d_psi());
  std::vector<Eigen::Triplet<double>> trips;
  ws.selector = Eigen::VectorXd::Ones(ws.n);
  const double cot = mesh.theta().cot();
  for (Eigen::Index id : mesh.boundary_ids()) {
    ws.selector[id] = 0.0;
    double sign = (ws.dim == 1 && mesh.signed_coord()[id] < 0.0) ? -1.0 : 1.0;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(dpsi_rows, id); it; ++it)
      trips.emplace_back(id, it.col(), sign * it.value());
    trips.emplace_back(id, id, -cot);
  }
  ws.robin = SpMat(ws.n, ws.n);
  ws.robin.setFromTriplets(trips.begin(), trips.end());
}

// Pointwise gauge data at x = ell/h: phi(x), and the logarithmic slope
// s = x phi'(x)/phi(x) that drives both linearizations.
struct GaugeFields {
  Eigen::VectorXd phi_val;
  Eigen::VectorXd slope;
};

GaugeFields gauge_fields(const OrliczGauge& phi, const Eigen::VectorXd& ell,
                         const Eigen::VectorXd& h) {
  GaugeFields out;
  out.phi_val.resize(h.size());
  out.slope.resize(h.size());
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    double x = ell[i] / h[i];
    double v = phi.value(x);
    out.phi_val[i] = v;
    out.slope[i] = x * phi.deriv(x) / v;
  }
  return out;
}

// One residual evaluation, non-throwing: `ok` is false when positivity or
// definiteness fails (carrying the offending node), so the line search can
// reject trial steps without exception traffic.
struct EvalState {
  bool ok = false;
  Eigen::Index bad_node = -1;
  double bad_value = 0.0;
  const char* fail_what = "";

  SymMatrixField area;
  Eigen::VectorXd det;
  ResidualEval res;
  Eigen::VectorXd stacked;  // interior rows and Robin rows in node slots
  double norm = kInf;
  double volume = 0.0;
};

EvalState evaluate(const Workspace& ws, const ScalarField& h, const ScalarField& ft,
                   double lambda, double det_floor) {
  const CapMesh& mesh = *ws.mesh;
  EvalState st;

  for (Eigen::Index i = 0; i < h.size(); ++i) {
    if (!(h[i] > 0.0)) {
      st.bad_node = i;
      st.bad_value = h[i];
      st.fail_what = "support not positive";
      return st;
    }
  }

  st.area = mesh.area_operator(h);
  st.det = st.area.determinant();
  double min_det = kInf, min_trace = kInf;
  Eigen::Index min_node = -1;
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    double tr = st.area.trace(i);
    if (st.det[i] < min_det) {
      min_det = st.det[i];
      min_node = i;
    }
    min_trace = std::min(min_trace, tr);
  }
  st.res.min_det = min_det;
  st.res.min_trace = min_trace;
  if (!(min_det > det_floor) || (ws.dim == 2 && !(min_trace > 0.0))) {
    st.bad_node = min_node;
    st.bad_value = st.area.min_eig(min_node);
    st.fail_what = "area matrix not positive definite";
    return st;
  }

  const Eigen::VectorXd& ell = mesh.ell();
  GaugeFields gf = gauge_fields(*ws.data->phi, ell, h);
  st.res.interior = Eigen::VectorXd::Zero(h.size());
  st.stacked.resize(h.size());
  double max_int = 0.0;
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    if (mesh.is_boundary(i)) continue;
    double r = std::log(st.det[i]) + std::log(h[i]) + std::log(gf.phi_val[i]) -
               std::log(lambda * ft[i]);
    if (!std::isfinite(r)) {
      st.bad_node = i;
      st.bad_value = r;
      st.fail_what = "non-finite residual";
      return st;
    }
    st.res.interior[i] = r;
    st.stacked[i] = r;
    max_int = std::max(max_int, std::abs(r));
  }

  const auto& bids = mesh.boundary_ids();
  Eigen::VectorXd rb = ws.robin * h;
  st.res.boundary.resize(static_cast<Eigen::Index>(bids.size()));
  double max_bnd = 0.0;
  for (size_t q = 0; q < bids.size(); ++q) {
    double r = rb[bids[q]];
    st.res.boundary[static_cast<Eigen::Index>(q)] = r;
    st.stacked[bids[q]] = r;
    max_bnd = std::max(max_bnd, std::abs(r));
  }

  double h_scale = h.cwiseAbs().maxCoeff();
  st.norm = std::max(max_int, max_bnd / std::max(h_scale, 1e-300));
  st.volume = mesh.integrate(h.cwiseProduct(st.det)) / (ws.dim + 1);
  st.ok = true;
  return st;
}

// Interior rows of either linearization; boundary rows are handled by the
// caller (zeroed and replaced by Robin, or kept for the full operator).
SpMat interior_rows(const Workspace& ws, const EvalState& st, const ScalarField& h,
                    const ScalarField& ft, double lambda, LinearizedKind kind) {
  const Eigen::VectorXd& ell = ws.mesh->ell();
  GaugeFields gf = gauge_fields(*ws.data->phi, ell, h);
  Eigen::VectorXd zero_order(h.size());
  bool log_form = kind == LinearizedKind::newton_log;
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    double one_minus_s = 1.0 - gf.slope[i];
    zero_order[i] = log_form
                        ? one_minus_s / h[i]
                        : one_minus_s * lambda * ft[i] / (h[i] * h[i] * gf.phi_val[i]);
  }

  if (ws.dim == 1) {
    Eigen::VectorXd c = log_form ? Eigen::VectorXd(st.det.cwiseInverse())
                                 : Eigen::VectorXd(Eigen::VectorXd::Ones(h.size()));
    return SpMat(c.asDiagonal() * ws.m11) + diagonal_matrix(zero_order);
  }

  Eigen::VectorXd c11, c12, c22;
  if (log_form) {
    c11 = st.area.m22.cwiseQuotient(st.det);
    c12 = st.area.m12.cwiseQuotient(st.det);
    c22 = st.area.m11.cwiseQuotient(st.det);
  } else {
    c11 = st.area.m22;
    c12 = st.area.m12;
    c22 = st.area.m11;
  }
  return SpMat(c11.asDiagonal() * ws.m11) - SpMat((2.0 * c12).asDiagonal() * ws.m12) +
         SpMat(c22.asDiagonal() * ws.m22) + diagonal_matrix(zero_order);
}

SpMat assemble(const Workspace& ws, const EvalState& st, const ScalarField& h,
               const ScalarField& ft, double lambda, LinearizedKind kind) {
  SpMat inner = interior_rows(ws, st, h, ft, lambda, kind);
  if (kind == LinearizedKind::cofactor_full) return inner;
  return SpMat(ws.selector.asDiagonal() * inner) + ws.robin;
}

// Square bordered system [[J, col],[row', 0]] closing the rank-one deficiency
// of scale-invariant solves.
SpMat bordered(const Workspace& ws, const SpMat& jac, const Eigen::VectorXd& col,
               const Eigen::VectorXd& row) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(jac.nonZeros()) + 2 * static_cast<size_t>(ws.n) + 1);
  for (int k = 0; k < jac.outerSize(); ++k)
    for (SpMat::InnerIterator it(jac, k); it; ++it)
      trips.emplace_back(static_cast<Eigen::Index>(it.row()), static_cast<Eigen::Index>(it.col()),
                         it.value());
  for (Eigen::Index i = 0; i < ws.n; ++i) {
    if (ws.selector[i] > 0.5) trips.emplace_back(i, ws.n, col[i]);
    trips.emplace_back(ws.n, i, row[i]);
  }
  trips.emplace_back(ws.n, ws.n, 0.0);
  SpMat out(ws.n + 1, ws.n + 1);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

double field_volume(const CapMesh& mesh, const ScalarField& h) {
  SymMatrixField area = mesh.area_operator(h);
  return mesh.integrate(h.cwiseProduct(area.determinant())) / (mesh.dim() + 1);
}

void fill_monitors(const Workspace& ws, const EvalState& st, const ScalarField& h,
                   NewtonRecord& rec) {
  const CapMesh& mesh = *ws.mesh;
  rec.min_h = h.minCoeff();
  double min_eig = kInf;
  for (Eigen::Index i = 0; i < h.size(); ++i) min_eig = std::min(min_eig, st.area.min_eig(i));
  rec.min_eig = min_eig;

  VectorField grad = mesh.gradient(h);
  SymMatrixField hess = mesh.hessian(h);
  double max_grad = 0.0, max_hess = 0.0;
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    double g2 = grad.comp_psi[i] * grad.comp_psi[i];
    if (ws.dim == 2) g2 += grad.comp_az[i] * grad.comp_az[i];
    max_grad = std::max(max_grad, std::sqrt(g2));
    double hmax = std::abs(hess.m11[i]);
    if (ws.dim == 2) hmax = std::max({hmax, std::abs(hess.m12[i]), std::abs(hess.m22[i])});
    max_hess = std::max(max_hess, hmax);
  }
  rec.max_gradient = max_grad;
  rec.max_hessian = max_hess;
}

// Directional finite-difference probe of the assembled Jacobian at the
// iterate it was built from. The direction is a smooth analytic mode field:
// white noise is useless here because its azimuthal second differences get
// amplified by 1/sin^2(psi) near the pole, pushing the perturbed area matrix
// out of the definite cone for any useful step size.
void fd_spot_check(const Workspace& ws, const SpMat& jac, const ScalarField& h,
                   const ScalarField& ft, double lambda, int iter, NewtonRecord& rec) {
  SplitMix64 rng(substream_seed(0x6a0bcd3f, static_cast<uint64_t>(iter)));
  Eigen::VectorXd v = random_even_field(rng, *ws.mesh);
  // Central differences of the near-pole rows carry rounding noise of about
  // 1e-12/eps, so the optimal step is much coarser than sqrt(eps_mach).
  double eps = 5e-5 * h.cwiseAbs().maxCoeff() / std::max(1.0, v.cwiseAbs().maxCoeff());
  EvalState plus = evaluate(ws, h + eps * v, ft, lambda, 0.0);
  EvalState minus = evaluate(ws, h - eps * v, ft, lambda, 0.0);
  if (!plus.ok || !minus.ok) return;
  Eigen::VectorXd fd = (plus.stacked - minus.stacked) / (2.0 * eps);
  Eigen::VectorXd jv = jac * v;
  double err = (fd - jv).cwiseAbs().maxCoeff() / (jv.cwiseAbs().maxCoeff() + 1e-30);
  rec.fd_jacobian_error = std::max(rec.fd_jacobian_error, err);
}

// Rounding noise of the stacked residual at h: the cancellation in forming
// the operator rows is eps_mach * |rows| |h|, which is the honest resolution
// limit of the discrete residual. Newton cannot do better than this floor.
double residual_noise_floor(const SpMat& jac, const ScalarField& h) {
  Eigen::VectorXd habs = h.cwiseAbs();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(jac.rows());
  for (int k = 0; k < jac.outerSize(); ++k)
    for (SpMat::InnerIterator it(jac, k); it; ++it)
      acc[it.row()] += std::abs(it.value()) * habs[it.col()];
  return std::numeric_limits<double>::epsilon() * acc.maxCoeff();
}

NewtonRecord newton_impl(Workspace& ws, ScalarField& h, double t, double& lambda,
                         const SolverConfig& config) {
  const ProblemData& data = *ws.data;
  const CapMesh& mesh = *ws.mesh;
  ScalarField ft = homotopy_data(data, t);
  bool border_lambda = data.scale_invariant && data.form == ProblemForm::normalized;

  NewtonRecord rec;
  EvalState st = evaluate(ws, h, ft, lambda, 0.0);
  if (!st.ok)
    fail(ErrorCode::validation, std::string("newton_solve: initial iterate invalid: ") +
                                    st.fail_what + " at node " + std::to_string(st.bad_node) +
                                    " (value " + std::to_string(st.bad_value) + ")");
  rec.residual_history.push_back(st.norm);

  double noise_floor = 0.0;
  for (int iter = 1; iter <= config.newton_max_iter; ++iter) {
    if (st.norm <= config.newton_tol) break;

    SpMat jac = assemble(ws, st, h, ft, lambda, LinearizedKind::newton_log);
    noise_floor = residual_noise_floor(jac, h);
    if (config.fd_check_every > 0 && iter % config.fd_check_every == 0)
      fd_spot_check(ws, jac, h, ft, lambda, iter, rec);

    Eigen::VectorXd delta(ws.n);
    double dloglam = 0.0;
    bool solved = false;
    if (!data.scale_invariant) {
      if (!ws.plain_analyzed) {
        ws.lu_plain.analyzePattern(jac);
        ws.plain_analyzed = true;
      }
      ws.lu_plain.factorize(jac);
      if (ws.lu_plain.info() == Eigen::Success) {
        delta = ws.lu_plain.solve(-st.stacked);
        // One refinement pass takes the step accuracy to the rounding level
        // of the residual itself; without it Newton bottoms out around
        // cond(J) * eps_mach, which is above newton_tol on fine meshes.
        delta += ws.lu_plain.solve(Eigen::VectorXd(-st.stacked - jac * delta));
        solved = ws.lu_plain.info() == Eigen::Success;
      }
    } else {
      Eigen::VectorXd scale_row = mesh.weights().cwiseProduct(h);
      Eigen::VectorXd col = border_lambda ? Eigen::VectorXd::Constant(ws.n, -1.0).eval()
                                          : scale_row;
      SpMat jb = bordered(ws, jac, col, scale_row);
      if (!ws.border_analyzed) {
        ws.lu_border.analyzePattern(jb);
        ws.border_analyzed = true;
      }
      ws.lu_border.factorize(jb);
      if (ws.lu_border.info() == Eigen::Success) {
        Eigen::VectorXd rhs(ws.n + 1);
        rhs.head(ws.n) = -st.stacked;
        rhs[ws.n] = 0.0;
        Eigen::VectorXd sol = ws.lu_border.solve(rhs);
        sol += ws.lu_border.solve(Eigen::VectorXd(rhs - jb * sol));
        if (ws.lu_border.info() == Eigen::Success) {
          delta = sol.head(ws.n);
          if (border_lambda) dloglam = sol[ws.n];
          solved = true;
        }
      }
    }
    if (!solved) {
      rec.note = "linear solve failed (singular Jacobian)";
      rec.iterations = iter;
      break;
    }
    if (config.project_even) delta = mesh.reflect_even(delta);

    bool accepted = false;
    double alpha = 1.0;
    EvalState trial;
    for (int ls = 0; ls <= config.line_search_max; ++ls) {
      ScalarField h_try = h + alpha * delta;
      double lambda_try = border_lambda ? lambda * std::exp(alpha * dloglam) : lambda;
      trial = evaluate(ws, h_try, ft, lambda_try, config.psd_floor);
      if (trial.ok && trial.norm <= (1.0 - 1e-4 * alpha) * st.norm) {
        h = std::move(h_try);
        lambda = lambda_try;
        accepted = true;
        break;
      }
      alpha *= config.line_search_shrink;
    }
    rec.iterations = iter;
    if (!accepted) {
      if (data.scale_invariant && st.norm <= config.stall_accept_factor * ws.stencil) {
        // Scale-invariant data that is not exactly representable on the mesh
        // leaves a one-dimensional residual component no step can remove;
        // accept the stationary point when it sits at stencil level.
        rec.floor_accepted = true;
        rec.note = "accepted at the mesh representation floor";
      } else if (st.norm <= config.stall_accept_factor * noise_floor) {
        // Stationary within rounding noise of the residual evaluation.
        rec.floor_accepted = true;
        rec.note = "accepted at the rounding noise floor";
      } else {
        rec.note = "line search found no acceptable step";
      }
      break;
    }
    st = std::move(trial);
    rec.residual_history.push_back(st.norm);

    if (data.scale_invariant && st.norm <= config.stall_accept_factor * ws.stencil &&
        rec.residual_history.size() >= 2) {
      double prev = rec.residual_history[rec.residual_history.size() - 2];
      if (st.norm > 0.25 * prev && st.norm > config.newton_tol) {
        rec.floor_accepted = true;
        break;
      }
    }
  }

  rec.final_residual = st.norm;
  rec.converged = st.norm <= config.newton_tol || rec.floor_accepted;

  if (rec.converged && border_lambda) {
    // The scale of h is free; pin it so the enclosed volume matches lambda
    // (the residual is invariant under this rescaling).
    double vol = st.volume;
    if (vol > 0.0) {
      double s = std::pow(lambda / vol, 1.0 / (ws.dim + 1));
      h *= s;
      EvalState rescaled = evaluate(ws, h, ft, lambda, 0.0);
      if (rescaled.ok) {
        st = std::move(rescaled);
        rec.final_residual = st.norm;
      }
    }
  }

  fill_monitors(ws, st, h, rec);
  return rec;
}

void merge_record(const NewtonRecord& rec, HomotopyStep& step) {
  step.newton_iterations += rec.iterations;
  step.residual_history.insert(step.residual_history.end(), rec.residual_history.begin(),
                               rec.residual_history.end());
  step.final_residual = rec.final_residual;
  step.min_h = rec.min_h;
  step.min_eig = rec.min_eig;
  step.max_gradient = rec.max_gradient;
  step.max_hessian = rec.max_hessian;
  step.floor_accepted = step.floor_accepted || rec.floor_accepted;
}

// Solves the stage problem at fixed t. For the normalized form with a
// well-posed gauge this wraps Newton in the volume-consistency iteration on
// lambda: exact rescaling for homogeneous gauges, a damped-then-secant update
// otherwise.
bool solve_stage(Workspace& ws, ScalarField& h, double& lambda, double t,
                 const SolverConfig& config, HomotopyStep& step) {
  const ProblemData& data = *ws.data;
  step.t = t;
  if (data.form == ProblemForm::unnormalized || data.scale_invariant) {
    NewtonRecord rec = newton_impl(ws, h, t, lambda, config);
    merge_record(rec, step);
    step.lambda = lambda;
    step.volume = field_volume(*ws.mesh, h);
    return rec.converged;
  }

  std::optional<double> degree = gauge_homogeneity_degree(*data.phi);
  int np1 = ws.dim + 1;
  double loglam_prev = 0.0, g_prev = 0.0;
  bool have_prev = false;
  for (int outer = 0; outer < config.normalization_max_iter; ++outer) {
    NewtonRecord rec = newton_impl(ws, h, t, lambda, config);
    merge_record(rec, step);
    if (!rec.converged) return false;

    double vol = field_volume(*ws.mesh, h);
    step.volume = vol;
    step.lambda = lambda;
    double g = std::log(vol) - std::log(lambda);
    if (std::abs(g) <= config.normalization_tol) return true;

    if (degree && std::abs(*degree - np1) > 1e-9) {
      // Homogeneous gauge: h(lambda) is an exact scaling family, so the
      // volume-consistent lambda solves in closed form.
      double kappa = np1 / (np1 - *degree);
      double loglam_new = (std::log(vol) - kappa * std::log(lambda)) / (1.0 - kappa);
      double s = std::exp((loglam_new - std::log(lambda)) / (np1 - *degree));
      h *= s;
      lambda = std::exp(loglam_new);
      continue;
    }

    double loglam = std::log(lambda);
    double loglam_next;
    if (have_prev && std::abs(g - g_prev) > 1e-300) {
      loglam_next = loglam - g * (loglam - loglam_prev) / (g - g_prev);
      double span = std::clamp(loglam_next - loglam, -1.0, 1.0);
      loglam_next = loglam + span;
    } else {
      loglam_next = loglam + config.normalization_damping * g;
    }
    loglam_prev = loglam;
    g_prev = g;
    have_prev = true;
    lambda = std::exp(loglam_next);
  }
  return false;
}

std::string validation_failure_summary(const ValidationReport& rep) {
  std::ostringstream os;
  os << "final body validation failed:";
  if (!rep.positive) os << " support not positive (min " << rep.min_h << ");";
  if (!rep.psd_ok)
    os << " convexity defect (min eigenvalue " << rep.min_eig << " < -" << rep.tol_psd << ");";
  if (!rep.robin_ok)
    os << " contact-angle defect (" << rep.robin_defect << " > " << rep.tol_robin << ");";
  if (!rep.even_ok)
    os << " evenness defect (" << rep.evenness_defect << " > " << rep.tol_even << ");";
  return os.str();
}

}  // namespace

std::string problem_form_name(ProblemForm form) {
  return form == ProblemForm::unnormalized ? "unnormalized" : "normalized";
}

ProblemForm problem_form_from_name(const std::string& name) {
  if (name == "unnormalized") return ProblemForm::unnormalized;
  if (name == "normalized") return ProblemForm::normalized;
  fail(ErrorCode::invalid_argument, "unknown problem form: " + name);
}

std::optional<double> gauge_homogeneity_degree(const OrliczGauge& phi) {
  if (auto p = phi.power_exponent()) return p;
  // Homogeneity of degree d means x phi'/phi is the constant d.
  double ref = 1.0 * phi.deriv(1.0) / phi.value(1.0);
  for (double x : {0.31, 0.53, 0.77, 1.39, 2.11, 2.93}) {
    double s = x * phi.deriv(x) / phi.value(x);
    if (std::abs(s - ref) > 1e-9 * std::max(1.0, std::abs(ref))) return std::nullopt;
  }
  return ref;
}

ProblemData make_problem(MeshPtr mesh, ScalarField f_values, GaugePtr phi, ProblemForm form) {
  if (!mesh) fail(ErrorCode::invalid_argument, "make_problem: null mesh");
  if (!phi) fail(ErrorCode::invalid_argument, "make_problem: null gauge");
  mesh->require_field(f_values, "make_problem");
  if (mesh->theta().value() >= M_PI / 2.0 - 1e-12)
    fail(ErrorCode::invalid_argument,
         "make_problem: the solver requires a contact angle below pi/2");

  double min_f = f_values.minCoeff();
  if (!(min_f > 0.0))
    fail(ErrorCode::validation,
         "make_problem: data must be strictly positive (min " + std::to_string(min_f) + ")");
  double max_f = f_values.cwiseAbs().maxCoeff();
  double even_defect = mesh->evenness_defect(f_values);
  if (even_defect > 1e-8 * max_f)
    fail(ErrorCode::validation, "make_problem: data must be even (defect " +
                                    std::to_string(even_defect) + ")");

  MembershipReport membership = validate_membership(*phi, mesh->dim());
  if (!membership.pass)
    fail(ErrorCode::validation,
         "make_problem: gauge fails the membership checks for dimension " +
             std::to_string(mesh->dim()) + ": " + membership.to_json().dump());

  ProblemData data;
  data.mesh = mesh;
  data.f = data_density(mesh, std::move(f_values));
  data.phi = std::move(phi);
  data.form = form;
  auto degree = gauge_homogeneity_degree(*data.phi);
  data.scale_invariant = degree && std::abs(*degree - (mesh->dim() + 1)) < 1e-9;
  return data;
}

ProblemData make_manufactured_problem(MeshPtr mesh, GaugePtr phi, double radius,
                                      ProblemForm form) {
  if (!mesh) fail(ErrorCode::invalid_argument, "make_manufactured_problem: null mesh");
  if (!(radius > 0.0))
    fail(ErrorCode::invalid_argument, "make_manufactured_problem: radius must be positive");
  double factor = phi->value(1.0 / radius) * std::pow(radius, mesh->dim() + 1);
  return make_problem(mesh, factor * mesh->ell(), std::move(phi), form);
}

ProblemData make_equality_case_problem(MeshPtr mesh, GaugePtr phi) {
  if (!mesh) fail(ErrorCode::invalid_argument, "make_equality_case_problem: null mesh");
  double hat = cap_hat_volume(mesh->dim(), mesh->theta().value());
  double rho = std::pow(hat, -1.0 / (mesh->dim() + 1));
  return make_manufactured_problem(mesh, std::move(phi), rho, ProblemForm::normalized);
}

AdmissibilityReport check_admissibility(const ProblemData& data) {
  const CapMesh& mesh = *data.mesh;
  AdmissibilityReport rep;
  rep.integral = mesh.integrate(data.f.values) / (mesh.dim() + 1);
  double hat = cap_hat_volume(mesh.dim(), mesh.theta().value());
  rep.threshold = data.phi->value(std::pow(hat, 1.0 / (mesh.dim() + 1)));
  rep.margin = rep.integral - rep.threshold;
  rep.min_f = data.f.values.minCoeff();
  rep.positive = rep.min_f > 0.0;
  rep.evenness_defect = mesh.evenness_defect(data.f.values);
  rep.even = rep.evenness_defect <= 1e-8 * data.f.values.cwiseAbs().maxCoeff();
  rep.pass = rep.positive && rep.even &&
             rep.margin >= -1e-10 * std::max(1.0, std::abs(rep.threshold));
  return rep;
}

json AdmissibilityReport::to_json() const {
  return json{{"integral", integral},
              {"threshold", threshold},
              {"margin", margin},
              {"min_f", min_f},
              {"positive", positive},
              {"evenness_defect", evenness_defect},
              {"even", even},
              {"pass", pass}};
}

void SolverConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) fail(ErrorCode::invalid_argument, std::string("SolverConfig: ") + name +
                                                          " must be positive");
  };
  positive(dt_init, "dt_init");
  positive(dt_min, "dt_min");
  positive(dt_shrink, "dt_shrink");
  positive(newton_tol, "newton_tol");
  positive(line_search_shrink, "line_search_shrink");
  positive(normalization_tol, "normalization_tol");
  positive(normalization_damping, "normalization_damping");
  positive(stall_accept_factor, "stall_accept_factor");
  positive(kernel_tol, "kernel_tol");
  if (dt_init > 1.0 || dt_max > 1.0)
    fail(ErrorCode::invalid_argument, "SolverConfig: homotopy steps must lie in (0, 1]");
  if (dt_grow < 1.0) fail(ErrorCode::invalid_argument, "SolverConfig: dt_grow must be >= 1");
  if (dt_shrink >= 1.0)
    fail(ErrorCode::invalid_argument, "SolverConfig: dt_shrink must be < 1");
  if (line_search_shrink >= 1.0)
    fail(ErrorCode::invalid_argument, "SolverConfig: line_search_shrink must be < 1");
  if (newton_max_iter < 1 || line_search_max < 0 || normalization_max_iter < 1)
    fail(ErrorCode::invalid_argument, "SolverConfig: iteration limits must be positive");
  if (psd_floor < 0.0)
    fail(ErrorCode::invalid_argument, "SolverConfig: psd_floor must be non-negative");
}

json SolverConfig::to_json() const {
  return json{{"dt_init", dt_init},
              {"dt_min", dt_min},
              {"dt_grow", dt_grow},
              {"dt_shrink", dt_shrink},
              {"dt_max", dt_max},
              {"newton_max_iter", newton_max_iter},
              {"newton_tol", newton_tol},
              {"line_search_shrink", line_search_shrink},
              {"line_search_max", line_search_max},
              {"psd_floor", psd_floor},
              {"project_even", project_even},
              {"normalization_tol", normalization_tol},
              {"normalization_max_iter", normalization_max_iter},
              {"normalization_damping", normalization_damping},
              {"stall_accept_factor", stall_accept_factor},
              {"fd_check_every", fd_check_every},
              {"run_diagnostics", run_diagnostics},
              {"kernel_tol", kernel_tol}};
}

ScalarField homotopy_data(const ProblemData& data, double t) {
  return (1.0 - t) * data.phi->value(1.0) * data.mesh->ell() + t * data.f.values;
}

double ResidualEval::norm(double h_scale) const {
  double max_int = interior.size() ? interior.cwiseAbs().maxCoeff() : 0.0;
  double max_bnd = boundary.size() ? boundary.cwiseAbs().maxCoeff() : 0.0;
  return std::max(max_int, max_bnd / std::max(h_scale, 1e-300));
}

ResidualEval solver_residual(const ProblemData& data, const ScalarField& h, double t,
                             double lambda) {
  Workspace ws;
  build_workspace(data, ws);
  if (!(lambda > 0.0)) fail(ErrorCode::invalid_argument, "solver_residual: lambda must be positive");
  EvalState st = evaluate(ws, h, homotopy_data(data, t), lambda, 0.0);
  if (!st.ok)
    fail(ErrorCode::validation, std::string("solver_residual: ") + st.fail_what + " at node " +
                                    std::to_string(st.bad_node) + " (value " +
                                    std::to_string(st.bad_value) + ")");
  return st.res;
}

SpMat assemble_linearized(const ProblemData& data, const ScalarField& h, double t, double lambda,
                          LinearizedKind kind) {
  Workspace ws;
  build_workspace(data, ws);
  ScalarField ft = homotopy_data(data, t);
  EvalState st = evaluate(ws, h, ft, lambda, 0.0);
  if (!st.ok)
    fail(ErrorCode::validation, std::string("assemble_linearized: ") + st.fail_what +
                                    " at node " + std::to_string(st.bad_node));
  return assemble(ws, st, h, ft, lambda, kind);
}

ScalarField zero_order_coefficient(const ProblemData& data, const ScalarField& h, double t,
                                   double lambda) {
  data.mesh->require_field(h, "zero_order_coefficient");
  ScalarField ft = homotopy_data(data, t);
  GaugeFields gf = gauge_fields(*data.phi, data.mesh->ell(), h);
  ScalarField out(h.size());
  for (Eigen::Index i = 0; i < h.size(); ++i)
    out[i] = (1.0 - gf.slope[i]) * lambda * ft[i] / (h[i] * h[i] * gf.phi_val[i]);
  return out;
}

json NewtonRecord::to_json() const {
  json j{{"iterations", iterations},
         {"converged", converged},
         {"floor_accepted", floor_accepted},
         {"final_residual", final_residual},
         {"residual_history", residual_history},
         {"min_h", min_h},
         {"min_eig", min_eig},
         {"max_gradient", max_gradient},
         {"max_hessian", max_hessian}};
  if (fd_jacobian_error >= 0.0) j["fd_jacobian_error"] = fd_jacobian_error;
  if (!note.empty()) j["note"] = note;
  return j;
}

NewtonRecord newton_solve(const ProblemData& data, ScalarField& h, double t, double& lambda,
                          const SolverConfig& config) {
  config.validate();
  Workspace ws;
  build_workspace(data, ws);
  return newton_impl(ws, h, t, lambda, config);
}

ScalarField project_to_robin(const CapMesh& mesh, ScalarField v) {
  mesh.require_field(v, "project_to_robin");
  Eigen::SparseMatrix<double, Eigen::RowMajor> dpsi_rows(mesh.d_psi());
  const double cot = mesh.theta().cot();
  for (Eigen::Index id : mesh.boundary_ids()) {
    double sign = (mesh.dim() == 1 && mesh.signed_coord()[id] < 0.0) ? -1.0 : 1.0;
    double diag = -cot;
    double rest = 0.0;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(dpsi_rows, id); it;
         ++it) {
      if (it.col() == id)
        diag += sign * it.value();
      else
        rest += sign * it.value() * v[it.col()];
    }
    v[id] = -rest / diag;
  }
  return v;
}

double symmetry_defect(const ProblemData& data, const ScalarField& h, double t, double lambda,
                       const ScalarField& v, const ScalarField& w) {
  const CapMesh& mesh = *data.mesh;
  mesh.require_field(v, "symmetry_defect");
  mesh.require_field(w, "symmetry_defect");
  SpMat op = assemble_linearized(data, h, t, lambda, LinearizedKind::cofactor_full);
  double vLw = mesh.integrate(v.cwiseProduct(op * w));
  double wLv = mesh.integrate(w.cwiseProduct(op * v));
  double nv = std::sqrt(mesh.integrate(v.cwiseAbs2()));
  double nw = std::sqrt(mesh.integrate(w.cwiseAbs2()));
  return std::abs(vLw - wLv) / std::max(nv * nw, 1e-300);
}

json KernelVectorReport::to_json() const {
  return json{{"sigma", sigma},
              {"constraint_integral", constraint_integral},
              {"support_pairing", support_pairing},
              {"determinant_pairing", determinant_pairing},
              {"below_tol", below_tol}};
}

json OrthogonalityReport::to_json() const {
  json vecs = json::array();
  for (const auto& v : vectors) vecs.push_back(v.to_json());
  return json{{"weight_min", weight_min},
              {"weight_max", weight_max},
              {"weight_sign", weight_sign},
              {"symmetry_defect", symmetry_defect},
              {"vectors", vecs}};
}

OrthogonalityReport orthogonality_diagnostic(const ProblemData& data, const ScalarField& h,
                                             double t, double lambda,
                                             const SolverConfig& config) {
  const CapMesh& mesh = *data.mesh;
  mesh.require_field(h, "orthogonality_diagnostic");
  OrthogonalityReport rep;

  GaugeFields gf = gauge_fields(*data.phi, mesh.ell(), h);
  int np1 = mesh.dim() + 1;
  Eigen::VectorXd weight = gf.slope.array() - static_cast<double>(np1);
  rep.weight_min = weight.minCoeff();
  rep.weight_max = weight.maxCoeff();
  double ztol = 1e-10 * std::max(1.0, gf.slope.cwiseAbs().maxCoeff());
  if (rep.weight_min > ztol)
    rep.weight_sign = "positive";
  else if (rep.weight_max < -ztol)
    rep.weight_sign = "negative";
  else if (std::max(std::abs(rep.weight_min), std::abs(rep.weight_max)) <= ztol)
    rep.weight_sign = "zero";
  else
    rep.weight_sign = "mixed";

  // Symmetry of the full-row operator against random even Robin-compatible
  // fields, in the quadrature inner product.
  SplitMix64 rng(substream_seed(0x5d1f7a22, 1));
  double defect = 0.0;
  for (int k = 0; k < 3; ++k) {
    ScalarField a = project_to_robin(mesh, random_even_field(rng, mesh));
    ScalarField b = project_to_robin(mesh, random_even_field(rng, mesh));
    defect = std::max(defect, symmetry_defect(data, h, t, lambda, a, b));
  }
  rep.symmetry_defect = defect;

  // Smallest weighted singular triplets of the Robin-row operator by inverse
  // iteration on L' M L with deflation of the vectors already found.
  SpMat op = assemble_linearized(data, h, t, lambda, LinearizedKind::cofactor_robin);
  Eigen::SparseLU<SpMat> lu(op);
  SpMat op_t = SpMat(op.transpose());
  Eigen::SparseLU<SpMat> lu_t(op_t);
  if (lu.info() != Eigen::Success || lu_t.info() != Eigen::Success) return rep;

  const Eigen::VectorXd& wq = mesh.weights();
  auto weighted_dot = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return mesh.integrate(a.cwiseProduct(b));
  };
  ScalarField ft = homotopy_data(data, t);
  Workspace eval_ws;
  build_workspace(data, eval_ws);
  EvalState st = evaluate(eval_ws, h, ft, lambda, 0.0);
  std::vector<Eigen::VectorXd> found;
  for (int vec = 0; vec < 3; ++vec) {
    Eigen::VectorXd x(mesh.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.uniform(-1.0, 1.0);
    double sigma2 = kInf;
    for (int it = 0; it < 60; ++it) {
      for (const auto& f : found) x -= weighted_dot(x, f) * f;
      Eigen::VectorXd y = lu.solve(wq.cwiseInverse().cwiseProduct(lu_t.solve(wq.cwiseProduct(x))));
      if (!y.allFinite()) break;
      x = y / std::sqrt(std::max(weighted_dot(y, y), 1e-300));
      Eigen::VectorXd lx = op * x;
      double s2 = weighted_dot(lx, lx);
      if (std::abs(s2 - sigma2) <= 1e-10 * std::max(s2, 1e-300) && it > 4) {
        sigma2 = s2;
        break;
      }
      sigma2 = s2;
    }
    for (const auto& f : found) x -= weighted_dot(x, f) * f;
    double nx = std::sqrt(std::max(weighted_dot(x, x), 1e-300));
    x /= nx;
    found.push_back(x);

    KernelVectorReport kv;
    Eigen::VectorXd lx = op * x;
    kv.sigma = std::sqrt(std::max(weighted_dot(lx, lx), 0.0));
    Eigen::VectorXd fv = data.f.values;
    kv.constraint_integral = mesh.integrate(
        weight.cwiseProduct(fv).cwiseProduct(x).cwiseQuotient(h.cwiseProduct(gf.phi_val)));
    kv.support_pairing = mesh.integrate(h.cwiseProduct(x));
    kv.determinant_pairing =
        st.ok ? mesh.integrate(weight.cwiseProduct(x).cwiseProduct(st.det)) : 0.0;
    kv.below_tol = kv.sigma <= config.kernel_tol;
    rep.vectors.push_back(kv);
  }
  return rep;
}

json HomotopyStep::to_json() const {
  return json{{"t", t},
              {"dt", dt},
              {"newton_iterations", newton_iterations},
              {"residual_history", residual_history},
              {"final_residual", final_residual},
              {"lambda", lambda},
              {"volume", volume},
              {"min_h", min_h},
              {"min_eig", min_eig},
              {"max_gradient", max_gradient},
              {"max_hessian", max_hessian},
              {"floor_accepted", floor_accepted}};
}

json SolveReport::to_json() const {
  json steps_json = json::array();
  for (const auto& s : steps) steps_json.push_back(s.to_json());
  json j{{"converged", converged},
         {"last_good_t", last_good_t},
         {"final_residual", final_residual},
         {"volume", volume},
         {"lambda", lambda},
         {"scale_invariant", scale_invariant},
         {"admissibility_margin", admissibility_margin},
         {"steps", steps_json}};
  if (!stall_reason.empty()) j["stall_reason"] = stall_reason;
  if (body) {
    j["body"] = json{{"min_support", body->min_support()},
                     {"max_support", body->max_support()},
                     {"min_area_eig", body->min_area_eig()},
                     {"robin_defect", body->robin_defect()},
                     {"evenness_defect", body->evenness_defect()}};
  }
  if (diagnostics) j["diagnostics"] = diagnostics->to_json();
  return j;
}

SolveReport homotopy_solve(const ProblemData& data, const SolverConfig& config) {
  config.validate();
  Workspace ws;
  build_workspace(data, ws);
  const CapMesh& mesh = *data.mesh;

  SolveReport rep;
  rep.scale_invariant = data.scale_invariant;
  rep.admissibility_margin = check_admissibility(data).margin;

  ScalarField h;
  double lambda = 1.0;
  if (data.form == ProblemForm::unnormalized) {
    h = mesh.ell();
  } else {
    double hat = cap_hat_volume(mesh.dim(), mesh.theta().value());
    double c = 1.0 / data.phi->inverse(data.phi->value(1.0) * hat);
    h = c * mesh.ell();
    lambda = field_volume(mesh, h);
  }

  HomotopyStep start_step;
  start_step.dt = 0.0;
  if (!solve_stage(ws, h, lambda, 0.0, config, start_step)) {
    rep.steps.push_back(start_step);
    rep.converged = false;
    rep.last_good_t = -1.0;
    rep.final_residual = start_step.final_residual;
    rep.stall_reason = "Newton failed at the homotopy start t = 0";
    rep.volume = field_volume(mesh, h);
    rep.lambda = lambda;
    return rep;
  }
  rep.steps.push_back(start_step);

  double t = 0.0;
  double dt = config.dt_init;
  bool stalled = false;
  while (t < 1.0 - 1e-14) {
    double t_try = std::min(1.0, t + dt);
    ScalarField h_saved = h;
    double lambda_saved = lambda;
    HomotopyStep step;
    step.dt = t_try - t;
    if (solve_stage(ws, h, lambda, t_try, config, step)) {
      t = t_try;
      rep.steps.push_back(step);
      dt = std::min(dt * config.dt_grow, config.dt_max);
    } else {
      h = std::move(h_saved);
      lambda = lambda_saved;
      dt *= config.dt_shrink;
      if (dt < config.dt_min) {
        std::ostringstream os;
        os << "homotopy step underflow below dt_min = " << config.dt_min << " at t = " << t;
        rep.stall_reason = os.str();
        stalled = true;
        break;
      }
    }
  }

  rep.last_good_t = t;
  if (!rep.steps.empty()) rep.final_residual = rep.steps.back().final_residual;
  rep.volume = field_volume(mesh, h);
  rep.lambda = lambda;

  if (h.minCoeff() > 0.0) {
    BodyPtr body = make_body_from_support(data.mesh, h);
    ValidationOptions opts;
    opts.require_even = config.project_even;
    ValidationReport vrep = validate(*body, opts);
    rep.body = body;
    if (!stalled && !vrep.pass) {
      rep.converged = false;
      rep.stall_reason = validation_failure_summary(vrep);
    } else if (!stalled) {
      rep.converged = true;
    }
  } else if (!stalled) {
    rep.converged = false;
    rep.stall_reason = "final support not positive";
  }

  if (rep.converged && config.run_diagnostics)
    rep.diagnostics = orthogonality_diagnostic(data, h, 1.0, lambda, config);
  return rep;
}

}  // namespace capillary
