// C ABI over the core library. All exported functions catch everything,
// stash the message in a thread-local slot, and map the library error code
// onto the cap_status enum; no exception crosses the boundary.

#include "capillary/capillary.h"

#include <cstdlib>
#include <cstring>
#include <initializer_list>
#include <string>

#include <nlohmann/json.hpp>

#include "core/body.hpp"
#include "core/combination.hpp"
#include "core/functionals.hpp"
#include "core/inequalities.hpp"
#include "core/io.hpp"
#include "core/mesh.hpp"
#include "core/orlicz.hpp"
#include "core/random_bodies.hpp"
#include "core/solver.hpp"
#include "core/util.hpp"

using nlohmann::json;
namespace cc = capillary;

struct cap_mesh {
  cc::MeshPtr p;
};
struct cap_body {
  cc::BodyPtr p;
};
struct cap_gauge {
  cc::GaugePtr p;
};

namespace {

thread_local std::string t_last_error;

cap_status status_of(cc::ErrorCode code) {
  switch (code) {
    case cc::ErrorCode::invalid_argument:
      return CAP_ERR_INVALID_ARGUMENT;
    case cc::ErrorCode::validation:
      return CAP_ERR_VALIDATION;
    case cc::ErrorCode::mesh_mismatch:
      return CAP_ERR_MESH_MISMATCH;
    case cc::ErrorCode::out_of_range:
      return CAP_ERR_OUT_OF_RANGE;
    case cc::ErrorCode::solver_stall:
      return CAP_ERR_SOLVER_STALL;
    case cc::ErrorCode::io:
      return CAP_ERR_IO;
    case cc::ErrorCode::internal:
      return CAP_ERR_INTERNAL;
  }
  return CAP_ERR_INTERNAL;
}

// fn returns the status for the success path (usually CAP_OK); throws from
// the core become mapped failure codes.
template <typename Fn>
cap_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const cc::Error& e) {
    t_last_error = e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return CAP_ERR_INTERNAL;
  } catch (...) {
    t_last_error = "unidentified failure";
    return CAP_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) cc::fail(cc::ErrorCode::internal, "allocation failed");
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(bool cond, const std::string& what) {
  if (!cond) cc::fail(cc::ErrorCode::invalid_argument, what);
}

void require_len(int64_t got, Eigen::Index want, const char* what) {
  if (got != static_cast<int64_t>(want))
    cc::fail(cc::ErrorCode::out_of_range, std::string(what) + ": buffer length " +
                                              std::to_string(got) + ", mesh has " +
                                              std::to_string(want) + " nodes");
}

json parse_json_arg(const char* text, const char* what) {
  if (text == nullptr || *text == '\0') return json::object();
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) cc::fail(cc::ErrorCode::invalid_argument, std::string(what) + ": not valid JSON");
  if (!j.is_object()) cc::fail(cc::ErrorCode::invalid_argument, std::string(what) + ": expected a JSON object");
  return j;
}

// Typos in option keys should fail loudly instead of silently using defaults.
void check_keys(const json& obj, std::initializer_list<const char*> allowed, const char* what) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        known = true;
        break;
      }
    if (!known)
      cc::fail(cc::ErrorCode::invalid_argument,
               std::string(what) + ": unknown key \"" + item.key() + "\"");
  }
}

double number_at(const json& obj, const char* key, const char* what) {
  if (!obj.contains(key))
    cc::fail(cc::ErrorCode::invalid_argument, std::string(what) + ": missing \"" + key + "\"");
  const json& v = obj.at(key);
  if (!v.is_number())
    cc::fail(cc::ErrorCode::invalid_argument, std::string(what) + ": \"" + key + "\" must be a number");
  return v.get<double>();
}

cc::MeshPtr mesh_from_spec(const json& spec, const char* what) {
  if (!spec.is_object())
    cc::fail(cc::ErrorCode::invalid_argument, std::string(what) + ": \"mesh\" must be an object");
  check_keys(spec, {"dim", "theta", "rings", "azimuths"}, what);
  int dim = static_cast<int>(number_at(spec, "dim", what));
  double theta = number_at(spec, "theta", what);
  int rings = static_cast<int>(number_at(spec, "rings", what));
  int azimuths = spec.contains("azimuths") ? static_cast<int>(number_at(spec, "azimuths", what)) : 0;
  return cc::CapMesh::build(dim, cc::ContactAngle(theta), rings, azimuths);
}

cc::SolverConfig config_from_json(const json& j, const char* what) {
  if (!j.is_object())
    cc::fail(cc::ErrorCode::invalid_argument, std::string(what) + ": \"config\" must be an object");
  check_keys(j,
             {"dt_init", "dt_min", "dt_grow", "dt_shrink", "dt_max", "newton_max_iter",
              "newton_tol", "line_search_shrink", "line_search_max", "psd_floor", "project_even",
              "normalization_tol", "normalization_max_iter", "normalization_damping",
              "stall_accept_factor", "fd_check_every", "run_diagnostics", "kernel_tol"},
             what);
  cc::SolverConfig cfg;
  auto num = [&](const char* key, double& slot) {
    if (j.contains(key)) slot = number_at(j, key, what);
  };
  auto integer = [&](const char* key, int& slot) {
    if (j.contains(key)) slot = static_cast<int>(number_at(j, key, what));
  };
  auto flag = [&](const char* key, bool& slot) {
    if (j.contains(key)) {
      if (!j.at(key).is_boolean())
        cc::fail(cc::ErrorCode::invalid_argument,
                 std::string(what) + ": \"" + key + "\" must be a boolean");
      slot = j.at(key).get<bool>();
    }
  };
  num("dt_init", cfg.dt_init);
  num("dt_min", cfg.dt_min);
  num("dt_grow", cfg.dt_grow);
  num("dt_shrink", cfg.dt_shrink);
  num("dt_max", cfg.dt_max);
  integer("newton_max_iter", cfg.newton_max_iter);
  num("newton_tol", cfg.newton_tol);
  num("line_search_shrink", cfg.line_search_shrink);
  integer("line_search_max", cfg.line_search_max);
  num("psd_floor", cfg.psd_floor);
  flag("project_even", cfg.project_even);
  num("normalization_tol", cfg.normalization_tol);
  integer("normalization_max_iter", cfg.normalization_max_iter);
  num("normalization_damping", cfg.normalization_damping);
  num("stall_accept_factor", cfg.stall_accept_factor);
  integer("fd_check_every", cfg.fd_check_every);
  flag("run_diagnostics", cfg.run_diagnostics);
  num("kernel_tol", cfg.kernel_tol);
  cfg.validate();
  return cfg;
}

// Shared by solve and admissibility. Accepts the full solve option set so
// one options document drives both entry points.
cc::ProblemData problem_from_options(const json& o, const char* what) {
  check_keys(o, {"mesh", "phi", "f", "form", "config", "trace_csv"}, what);
  if (!o.contains("mesh"))
    cc::fail(cc::ErrorCode::invalid_argument, std::string(what) + ": missing \"mesh\"");
  if (!o.contains("phi"))
    cc::fail(cc::ErrorCode::invalid_argument, std::string(what) + ": missing \"phi\"");
  if (!o.contains("f"))
    cc::fail(cc::ErrorCode::invalid_argument, std::string(what) + ": missing \"f\"");
  cc::MeshPtr mesh = mesh_from_spec(o.at("mesh"), what);
  cc::GaugePtr phi = cc::make_gauge(o.at("phi"));
  bool form_given = o.contains("form");
  cc::ProblemForm form = cc::ProblemForm::unnormalized;
  if (form_given) {
    if (!o.at("form").is_string())
      cc::fail(cc::ErrorCode::invalid_argument, std::string(what) + ": \"form\" must be a string");
    form = cc::problem_form_from_name(o.at("form").get<std::string>());
  }

  const json& f = o.at("f");
  if (!f.is_object() || !f.contains("type") || !f.at("type").is_string())
    cc::fail(cc::ErrorCode::invalid_argument,
             std::string(what) + ": \"f\" must be an object with a string \"type\"");
  std::string type = f.at("type").get<std::string>();
  if (type == "manufactured") {
    check_keys(f, {"type", "radius"}, what);
    double radius = number_at(f, "radius", what);
    return cc::make_manufactured_problem(mesh, phi, radius, form);
  }
  if (type == "equality-case") {
    check_keys(f, {"type"}, what);
    cc::ProblemData data = cc::make_equality_case_problem(mesh, phi);
    // The construction is normalized by nature; honor an explicit override,
    // where the same data poses a well-defined unnormalized problem.
    if (form_given && form != data.form)
      return cc::make_problem(mesh, data.f.values, phi, form);
    return data;
  }
  if (type == "values") {
    check_keys(f, {"type", "values"}, what);
    if (!f.contains("values") || !f.at("values").is_array())
      cc::fail(cc::ErrorCode::invalid_argument,
               std::string(what) + ": \"f\" of type \"values\" needs a \"values\" array");
    const json& arr = f.at("values");
    Eigen::VectorXd values(arr.size());
    for (Eigen::Index i = 0; i < values.size(); ++i) {
      const json& v = arr.at(static_cast<size_t>(i));
      if (!v.is_number())
        cc::fail(cc::ErrorCode::invalid_argument,
                 std::string(what) + ": \"values\" entries must be numbers");
      values[i] = v.get<double>();
    }
    return cc::make_problem(mesh, std::move(values), phi, form);
  }
  cc::fail(cc::ErrorCode::invalid_argument,
           std::string(what) + ": unknown \"f\" type \"" + type +
               "\" (expected manufactured, equality-case, or values)");
}

}  // namespace

extern "C" {

const char* cap_version(void) { return "1.0.0"; }

const char* cap_status_name(cap_status status) {
  switch (status) {
    case CAP_OK:
      return "ok";
    case CAP_ERR_INVALID_ARGUMENT:
      return "invalid-argument";
    case CAP_ERR_VALIDATION:
      return "validation";
    case CAP_ERR_MESH_MISMATCH:
      return "mesh-mismatch";
    case CAP_ERR_OUT_OF_RANGE:
      return "out-of-range";
    case CAP_ERR_SOLVER_STALL:
      return "solver-stall";
    case CAP_ERR_IO:
      return "io";
    case CAP_ERR_INTERNAL:
      return "internal";
  }
  return "unknown";
}

const char* cap_last_error_message(void) { return t_last_error.c_str(); }

void cap_string_free(char* s) { std::free(s); }

/* ------------------------------------------------------------------ */

cap_status cap_mesh_create(int dim, double theta, int res_polar, int res_azimuth, cap_mesh** out) {
  return guarded([&] {
    require(out != nullptr, "cap_mesh_create: out is NULL");
    *out = nullptr;
    cc::MeshPtr mesh = cc::CapMesh::build(dim, cc::ContactAngle(theta), res_polar, res_azimuth);
    *out = new cap_mesh{std::move(mesh)};
    return CAP_OK;
  });
}

void cap_mesh_free(cap_mesh* mesh) { delete mesh; }

int cap_mesh_dim(const cap_mesh* mesh) { return mesh ? mesh->p->dim() : 0; }

double cap_mesh_theta(const cap_mesh* mesh) { return mesh ? mesh->p->theta().value() : 0.0; }

int cap_mesh_rings(const cap_mesh* mesh) { return mesh ? mesh->p->rings() : 0; }

int cap_mesh_azimuths(const cap_mesh* mesh) { return mesh ? mesh->p->azimuths() : 0; }

int64_t cap_mesh_node_count(const cap_mesh* mesh) {
  return mesh ? static_cast<int64_t>(mesh->p->size()) : 0;
}

cap_status cap_mesh_stencil_error(const cap_mesh* mesh, double* out) {
  return guarded([&] {
    require(mesh != nullptr && out != nullptr, "cap_mesh_stencil_error: NULL argument");
    *out = mesh->p->stencil_error();
    return CAP_OK;
  });
}

cap_status cap_mesh_node_coordinates(const cap_mesh* mesh, double* polar, double* azimuth,
                                     double* height, int64_t len) {
  return guarded([&] {
    require(mesh != nullptr, "cap_mesh_node_coordinates: mesh is NULL");
    const cc::CapMesh& m = *mesh->p;
    require_len(len, m.size(), "cap_mesh_node_coordinates");
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      if (polar != nullptr) polar[i] = m.dim() == 1 ? m.signed_coord()[i] : m.polar()[i];
      if (azimuth != nullptr) azimuth[i] = m.dim() == 1 ? 0.0 : m.azimuth()[i];
      if (height != nullptr) height[i] = m.node_position(i)[2];
    }
    return CAP_OK;
  });
}

cap_status cap_mesh_perturbation_mode(const cap_mesh* mesh, const char* mode, double* out,
                                      int64_t len) {
  return guarded([&] {
    require(mesh != nullptr && mode != nullptr && out != nullptr,
            "cap_mesh_perturbation_mode: NULL argument");
    require_len(len, mesh->p->size(), "cap_mesh_perturbation_mode");
    cc::ScalarField field = cc::perturbation_mode(*mesh->p, mode);
    Eigen::Map<Eigen::VectorXd>(out, len) = field;
    return CAP_OK;
  });
}

cap_status cap_mesh_integrate(const cap_mesh* mesh, const double* values, int64_t len,
                              double* out) {
  return guarded([&] {
    require(mesh != nullptr && values != nullptr && out != nullptr,
            "cap_mesh_integrate: NULL argument");
    require_len(len, mesh->p->size(), "cap_mesh_integrate");
    Eigen::Map<const Eigen::VectorXd> v(values, len);
    *out = mesh->p->integrate(v);
    return CAP_OK;
  });
}

cap_status cap_mesh_to_json(const cap_mesh* mesh, char** out_json) {
  return guarded([&] {
    require(mesh != nullptr && out_json != nullptr, "cap_mesh_to_json: NULL argument");
    *out_json = dup_string(cc::mesh_to_json(*mesh->p).dump(2));
    return CAP_OK;
  });
}

cap_status cap_mesh_from_json(const char* json_text, cap_mesh** out) {
  return guarded([&] {
    require(json_text != nullptr && out != nullptr, "cap_mesh_from_json: NULL argument");
    *out = nullptr;
    json j = json::parse(json_text, nullptr, false);
    if (j.is_discarded()) cc::fail(cc::ErrorCode::io, "cap_mesh_from_json: not valid JSON");
    *out = new cap_mesh{cc::mesh_from_json(j)};
    return CAP_OK;
  });
}

/* ------------------------------------------------------------------ */

cap_status cap_gauge_create(const char* spec_json, cap_gauge** out) {
  return guarded([&] {
    require(spec_json != nullptr && out != nullptr, "cap_gauge_create: NULL argument");
    *out = nullptr;
    json spec = json::parse(spec_json, nullptr, false);
    if (spec.is_discarded())
      cc::fail(cc::ErrorCode::invalid_argument, "cap_gauge_create: spec is not valid JSON");
    *out = new cap_gauge{cc::make_gauge(spec)};
    return CAP_OK;
  });
}

cap_status cap_gauge_power(double p, cap_gauge** out) {
  return guarded([&] {
    require(out != nullptr, "cap_gauge_power: out is NULL");
    *out = nullptr;
    *out = new cap_gauge{cc::make_power_gauge(p)};
    return CAP_OK;
  });
}

void cap_gauge_free(cap_gauge* gauge) { delete gauge; }

cap_status cap_gauge_value(const cap_gauge* gauge, double x, double* out) {
  return guarded([&] {
    require(gauge != nullptr && out != nullptr, "cap_gauge_value: NULL argument");
    *out = gauge->p->value(x);
    return CAP_OK;
  });
}

cap_status cap_gauge_label(const cap_gauge* gauge, char** out) {
  return guarded([&] {
    require(gauge != nullptr && out != nullptr, "cap_gauge_label: NULL argument");
    *out = dup_string(gauge->p->label());
    return CAP_OK;
  });
}

cap_status cap_gauge_spec_json(const cap_gauge* gauge, char** out_json) {
  return guarded([&] {
    require(gauge != nullptr && out_json != nullptr, "cap_gauge_spec_json: NULL argument");
    *out_json = dup_string(gauge->p->spec().dump());
    return CAP_OK;
  });
}

cap_status cap_gauge_membership_json(const cap_gauge* gauge, int dim, char** out_json) {
  return guarded([&] {
    require(gauge != nullptr && out_json != nullptr, "cap_gauge_membership_json: NULL argument");
    *out_json = dup_string(cc::validate_membership(*gauge->p, dim).to_json().dump(2));
    return CAP_OK;
  });
}

/* ------------------------------------------------------------------ */

void cap_body_free(cap_body* body) { delete body; }

cap_status cap_body_cap(const cap_mesh* mesh, double r, cap_body** out) {
  return guarded([&] {
    require(mesh != nullptr && out != nullptr, "cap_body_cap: NULL argument");
    *out = nullptr;
    *out = new cap_body{cc::make_cap(mesh->p, r)};
    return CAP_OK;
  });
}

cap_status cap_body_from_support(const cap_mesh* mesh, const double* support, int64_t len,
                                 cap_body** out) {
  return guarded([&] {
    require(mesh != nullptr && support != nullptr && out != nullptr,
            "cap_body_from_support: NULL argument");
    *out = nullptr;
    require_len(len, mesh->p->size(), "cap_body_from_support");
    Eigen::Map<const Eigen::VectorXd> h(support, len);
    *out = new cap_body{cc::make_body_from_support(mesh->p, h)};
    return CAP_OK;
  });
}

cap_status cap_body_perturbed_cap(const cap_mesh* mesh, const double* g, int64_t len, double eps,
                                  cap_body** out) {
  return guarded([&] {
    require(mesh != nullptr && g != nullptr && out != nullptr,
            "cap_body_perturbed_cap: NULL argument");
    *out = nullptr;
    require_len(len, mesh->p->size(), "cap_body_perturbed_cap");
    Eigen::Map<const Eigen::VectorXd> gv(g, len);
    *out = new cap_body{cc::perturbed_cap(mesh->p, gv, eps)};
    return CAP_OK;
  });
}

cap_status cap_body_translate(const cap_body* body, const double* offset, int dim,
                              cap_body** out) {
  return guarded([&] {
    require(body != nullptr && offset != nullptr && out != nullptr,
            "cap_body_translate: NULL argument");
    *out = nullptr;
    require(dim == body->p->mesh().dim(),
            "cap_body_translate: offset dimension does not match the mesh");
    std::vector<double> off(offset, offset + dim);
    *out = new cap_body{cc::translate_horizontal(*body->p, off)};
    return CAP_OK;
  });
}

cap_status cap_body_scale(const cap_body* body, double factor, cap_body** out) {
  return guarded([&] {
    require(body != nullptr && out != nullptr, "cap_body_scale: NULL argument");
    *out = nullptr;
    *out = new cap_body{body->p->scaled(factor)};
    return CAP_OK;
  });
}

cap_status cap_body_combine(const cap_gauge* gauge, double alpha, const cap_body* first,
                            double beta, const cap_body* second, cap_body** out) {
  return guarded([&] {
    require(gauge != nullptr && first != nullptr && second != nullptr && out != nullptr,
            "cap_body_combine: NULL argument");
    *out = nullptr;
    cc::CombinationSpec spec{gauge->p, alpha, beta};
    *out = new cap_body{cc::combine(spec, *first->p, *second->p)};
    return CAP_OK;
  });
}

int64_t cap_body_node_count(const cap_body* body) {
  return body ? static_cast<int64_t>(body->p->support().size()) : 0;
}

cap_status cap_body_mesh(const cap_body* body, cap_mesh** out) {
  return guarded([&] {
    require(body != nullptr && out != nullptr, "cap_body_mesh: NULL argument");
    *out = new cap_mesh{body->p->mesh_ptr()};
    return CAP_OK;
  });
}

cap_status cap_body_support(const cap_body* body, double* out, int64_t len) {
  return guarded([&] {
    require(body != nullptr && out != nullptr, "cap_body_support: NULL argument");
    require_len(len, body->p->support().size(), "cap_body_support");
    Eigen::Map<Eigen::VectorXd>(out, len) = body->p->support();
    return CAP_OK;
  });
}

cap_status cap_body_capillary_support(const cap_body* body, double* out, int64_t len) {
  return guarded([&] {
    require(body != nullptr && out != nullptr, "cap_body_capillary_support: NULL argument");
    require_len(len, body->p->capillary_support().size(), "cap_body_capillary_support");
    Eigen::Map<Eigen::VectorXd>(out, len) = body->p->capillary_support();
    return CAP_OK;
  });
}

cap_status cap_body_validate_json(const cap_body* body, const char* options_json, int* out_pass,
                                  char** out_report_json) {
  return guarded([&] {
    require(body != nullptr, "cap_body_validate_json: body is NULL");
    json o = parse_json_arg(options_json, "cap_body_validate_json");
    check_keys(o, {"tol_psd", "tol_robin", "tol_even", "require_even"}, "cap_body_validate_json");
    cc::ValidationOptions opts;
    if (o.contains("tol_psd")) opts.tol_psd = number_at(o, "tol_psd", "cap_body_validate_json");
    if (o.contains("tol_robin"))
      opts.tol_robin = number_at(o, "tol_robin", "cap_body_validate_json");
    if (o.contains("tol_even")) opts.tol_even = number_at(o, "tol_even", "cap_body_validate_json");
    if (o.contains("require_even")) {
      if (!o.at("require_even").is_boolean())
        cc::fail(cc::ErrorCode::invalid_argument,
                 "cap_body_validate_json: \"require_even\" must be a boolean");
      opts.require_even = o.at("require_even").get<bool>();
    }
    cc::ValidationReport report = cc::validate(*body->p, opts);
    if (out_pass != nullptr) *out_pass = report.pass ? 1 : 0;
    if (out_report_json != nullptr) *out_report_json = dup_string(report.to_json().dump(2));
    return CAP_OK;
  });
}

cap_status cap_body_to_json(const cap_body* body, char** out_json) {
  return guarded([&] {
    require(body != nullptr && out_json != nullptr, "cap_body_to_json: NULL argument");
    *out_json = dup_string(cc::body_to_json(*body->p).dump(2));
    return CAP_OK;
  });
}

cap_status cap_body_from_json(const char* json_text, cap_body** out) {
  return guarded([&] {
    require(json_text != nullptr && out != nullptr, "cap_body_from_json: NULL argument");
    *out = nullptr;
    json j = json::parse(json_text, nullptr, false);
    if (j.is_discarded()) cc::fail(cc::ErrorCode::io, "cap_body_from_json: not valid JSON");
    *out = new cap_body{cc::body_from_json(j)};
    return CAP_OK;
  });
}

/* ------------------------------------------------------------------ */

cap_status cap_volume(const cap_body* body, double* out) {
  return guarded([&] {
    require(body != nullptr && out != nullptr, "cap_volume: NULL argument");
    *out = cc::volume(*body->p);
    return CAP_OK;
  });
}

cap_status cap_wetting_energy(const cap_body* body, double* out) {
  return guarded([&] {
    require(body != nullptr && out != nullptr, "cap_wetting_energy: NULL argument");
    *out = cc::wetting_energy(*body->p);
    return CAP_OK;
  });
}

cap_status cap_density_json(const cap_body* body, const char* options_json, char** out_json) {
  return guarded([&] {
    require(body != nullptr && out_json != nullptr, "cap_density_json: NULL argument");
    json o = parse_json_arg(options_json, "cap_density_json");
    check_keys(o, {"kind", "exponent", "gauge"}, "cap_density_json");
    if (!o.contains("kind") || !o.at("kind").is_string())
      cc::fail(cc::ErrorCode::invalid_argument, "cap_density_json: missing string \"kind\"");
    cc::DensityKind kind = cc::density_kind_from_name(o.at("kind").get<std::string>());
    cc::MeasureDensity density;
    switch (kind) {
      case cc::DensityKind::surface:
        density = cc::surface_density(*body->p);
        break;
      case cc::DensityKind::lp:
        density = cc::lp_density(*body->p, number_at(o, "exponent", "cap_density_json"));
        break;
      case cc::DensityKind::orlicz: {
        if (!o.contains("gauge"))
          cc::fail(cc::ErrorCode::invalid_argument, "cap_density_json: orlicz needs \"gauge\"");
        density = cc::orlicz_density(*body->p, cc::make_gauge(o.at("gauge")));
        break;
      }
      case cc::DensityKind::cone_volume:
        density = cc::cone_volume_density(*body->p);
        break;
      case cc::DensityKind::data:
        cc::fail(cc::ErrorCode::invalid_argument,
                 "cap_density_json: \"data\" is not a derivable kind");
    }
    *out_json = dup_string(cc::density_to_json(density).dump(2));
    return CAP_OK;
  });
}

cap_status cap_v1(const cap_body* k, const cap_body* l, double* out) {
  return guarded([&] {
    require(k != nullptr && l != nullptr && out != nullptr, "cap_v1: NULL argument");
    *out = cc::v1(*k->p, *l->p);
    return CAP_OK;
  });
}

cap_status cap_orlicz_mixed_volume(const cap_gauge* gauge, const cap_body* k, const cap_body* l,
                                   double* out) {
  return guarded([&] {
    require(gauge != nullptr && k != nullptr && l != nullptr && out != nullptr,
            "cap_orlicz_mixed_volume: NULL argument");
    *out = cc::orlicz_mixed_volume(*gauge->p, *k->p, *l->p);
    return CAP_OK;
  });
}

cap_status cap_write_density_csv(const cap_mesh* mesh, const double* values, int64_t len,
                                 const char* path) {
  return guarded([&] {
    require(mesh != nullptr && values != nullptr && path != nullptr,
            "cap_write_density_csv: NULL argument");
    require_len(len, mesh->p->size(), "cap_write_density_csv");
    Eigen::Map<const Eigen::VectorXd> v(values, len);
    cc::write_density_csv(path, *mesh->p, v);
    return CAP_OK;
  });
}

/* ------------------------------------------------------------------ */

cap_status cap_verify_json(const char* options_json, int* out_pass, char** out_report_json) {
  return guarded([&] {
    json o = parse_json_arg(options_json, "cap_verify_json");
    check_keys(o, {"suite", "mesh", "seed", "pairs", "check", "gauges"}, "cap_verify_json");
    if (!o.contains("suite") || !o.at("suite").is_string())
      cc::fail(cc::ErrorCode::invalid_argument, "cap_verify_json: missing string \"suite\"");
    if (!o.contains("mesh"))
      cc::fail(cc::ErrorCode::invalid_argument, "cap_verify_json: missing \"mesh\"");
    cc::MeshPtr mesh = mesh_from_spec(o.at("mesh"), "cap_verify_json");
    cc::SuiteOptions opts;
    if (o.contains("seed")) {
      if (!o.at("seed").is_number_unsigned() && !o.at("seed").is_number_integer())
        cc::fail(cc::ErrorCode::invalid_argument, "cap_verify_json: \"seed\" must be an integer");
      opts.seed = o.at("seed").get<uint64_t>();
    }
    if (o.contains("pairs")) opts.pairs = static_cast<int>(number_at(o, "pairs", "cap_verify_json"));
    if (o.contains("check")) {
      const json& c = o.at("check");
      check_keys(c, {"slack_rel", "eq_tol_rel"}, "cap_verify_json check");
      if (c.contains("slack_rel"))
        opts.check.slack_rel = number_at(c, "slack_rel", "cap_verify_json check");
      if (c.contains("eq_tol_rel"))
        opts.check.eq_tol_rel = number_at(c, "eq_tol_rel", "cap_verify_json check");
    }
    if (o.contains("gauges")) {
      if (!o.at("gauges").is_array())
        cc::fail(cc::ErrorCode::invalid_argument, "cap_verify_json: \"gauges\" must be an array");
      for (const json& spec : o.at("gauges")) opts.gauges.push_back(cc::make_gauge(spec));
    }
    cc::SuiteResult result = cc::run_suite(o.at("suite").get<std::string>(), mesh, opts);
    if (out_pass != nullptr) *out_pass = result.pass ? 1 : 0;
    if (out_report_json != nullptr)
      *out_report_json = dup_string(cc::wrap_record("capillary-verify", result.to_json()).dump(2));
    return CAP_OK;
  });
}

cap_status cap_suite_names_json(char** out_json) {
  return guarded([&] {
    require(out_json != nullptr, "cap_suite_names_json: out is NULL");
    *out_json = dup_string(json(cc::suite_names()).dump());
    return CAP_OK;
  });
}

cap_status cap_admissibility_json(const char* options_json, int* out_pass,
                                  char** out_report_json) {
  return guarded([&] {
    json o = parse_json_arg(options_json, "cap_admissibility_json");
    cc::ProblemData data = problem_from_options(o, "cap_admissibility_json");
    cc::AdmissibilityReport report = cc::check_admissibility(data);
    if (out_pass != nullptr) *out_pass = report.pass ? 1 : 0;
    if (out_report_json != nullptr)
      *out_report_json =
          dup_string(cc::wrap_record("capillary-admissibility", report.to_json()).dump(2));
    return CAP_OK;
  });
}

cap_status cap_solve_json(const char* options_json, char** out_report_json, cap_body** out_body) {
  return guarded([&] {
    if (out_body != nullptr) *out_body = nullptr;
    json o = parse_json_arg(options_json, "cap_solve_json");
    cc::ProblemData data = problem_from_options(o, "cap_solve_json");
    cc::SolverConfig config;
    if (o.contains("config")) config = config_from_json(o.at("config"), "cap_solve_json");
    cc::SolveReport report = cc::homotopy_solve(data, config);
    if (o.contains("trace_csv")) {
      if (!o.at("trace_csv").is_string())
        cc::fail(cc::ErrorCode::invalid_argument, "cap_solve_json: \"trace_csv\" must be a string");
      cc::write_trace_csv(o.at("trace_csv").get<std::string>(), report);
    }
    if (out_report_json != nullptr)
      *out_report_json = dup_string(cc::wrap_record("capillary-solve", report.to_json()).dump(2));
    if (out_body != nullptr && report.body != nullptr) *out_body = new cap_body{report.body};
    if (!report.converged) {
      t_last_error = report.stall_reason.empty() ? "continuation did not converge"
                                                 : report.stall_reason;
      return CAP_ERR_SOLVER_STALL;
    }
    return CAP_OK;
  });
}

}  // extern "C"
