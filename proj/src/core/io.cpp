#include "io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "orlicz.hpp"

namespace capillary {

namespace {

using json = nlohmann::json;

void require_member(const json& j, const char* key, const char* what) {
  if (!j.contains(key))
    fail(ErrorCode::io, std::string(what) + ": missing field \"" + key + "\"");
}

double number_field(const json& j, const char* key, const char* what) {
  require_member(j, key, what);
  if (!j[key].is_number())
    fail(ErrorCode::io, std::string(what) + ": field \"" + key + "\" must be a number");
  return j[key].get<double>();
}

void check_envelope(const json& j, const std::string& format, const char* what) {
  require_member(j, "format", what);
  if (j["format"] != format)
    fail(ErrorCode::io, std::string(what) + ": expected format \"" + format + "\", found \"" +
                            j.value("format", std::string("?")) + "\"");
  require_member(j, "version", what);
  if (!j["version"].is_number_integer() || j["version"].get<int>() != 1)
    fail(ErrorCode::io, std::string(what) + ": unsupported version");
}

Eigen::VectorXd vector_field(const json& j, const char* key, const char* what) {
  require_member(j, key, what);
  const json& arr = j[key];
  if (!arr.is_array()) fail(ErrorCode::io, std::string(what) + ": \"" + key + "\" must be an array");
  Eigen::VectorXd out(arr.size());
  Eigen::Index i = 0;
  for (const auto& v : arr) {
    if (!v.is_number()) fail(ErrorCode::io, std::string(what) + ": non-numeric entry in \"" + key + "\"");
    out[i++] = v.get<double>();
  }
  return out;
}

}  // namespace

json mesh_to_json(const CapMesh& mesh) {
  return json{{"format", "capillary-mesh"},
              {"version", 1},
              {"dim", mesh.dim()},
              {"theta", mesh.theta().value()},
              {"rings", mesh.rings()},
              {"azimuths", mesh.azimuths()}};
}

MeshPtr mesh_from_json(const json& j) {
  check_envelope(j, "capillary-mesh", "mesh document");
  require_member(j, "dim", "mesh document");
  int dim = j["dim"].get<int>();
  double theta = number_field(j, "theta", "mesh document");
  require_member(j, "rings", "mesh document");
  int rings = j["rings"].get<int>();
  int azimuths = j.value("azimuths", 0);
  return CapMesh::build(dim, ContactAngle(theta), rings, azimuths);
}

json body_to_json(const CapillaryBody& body) {
  json support = json::array();
  for (Eigen::Index i = 0; i < body.support().size(); ++i) support.push_back(body.support()[i]);
  return json{{"format", "capillary-body"},
              {"version", 1},
              {"mesh", mesh_to_json(body.mesh())},
              {"support", std::move(support)}};
}

BodyPtr body_from_json(const json& j) {
  check_envelope(j, "capillary-body", "body document");
  require_member(j, "mesh", "body document");
  MeshPtr mesh = mesh_from_json(j["mesh"]);
  Eigen::VectorXd h = vector_field(j, "support", "body document");
  if (h.size() != mesh->size())
    fail(ErrorCode::io, "body document: support length " + std::to_string(h.size()) +
                            " does not match the mesh (" + std::to_string(mesh->size()) + ")");
  return make_body_from_support(mesh, std::move(h));
}

json density_to_json(const MeasureDensity& density) {
  json values = json::array();
  for (Eigen::Index i = 0; i < density.values.size(); ++i) values.push_back(density.values[i]);
  json j{{"format", "capillary-density"},
         {"version", 1},
         {"mesh", mesh_to_json(*density.mesh)},
         {"kind", density_kind_name(density.kind)},
         {"values", std::move(values)},
         {"total", density.total()}};
  if (density.kind == DensityKind::lp) j["exponent"] = density.exponent;
  if (density.kind == DensityKind::orlicz && density.gauge) j["gauge"] = density.gauge->spec();
  return j;
}

MeasureDensity density_from_json(const json& j) {
  check_envelope(j, "capillary-density", "density document");
  require_member(j, "mesh", "density document");
  MeshPtr mesh = mesh_from_json(j["mesh"]);
  Eigen::VectorXd values = vector_field(j, "values", "density document");
  if (values.size() != mesh->size())
    fail(ErrorCode::io, "density document: values length does not match the mesh");
  MeasureDensity out = data_density(mesh, std::move(values));
  if (j.contains("kind")) out.kind = density_kind_from_name(j["kind"].get<std::string>());
  if (j.contains("exponent")) out.exponent = j["exponent"].get<double>();
  if (j.contains("gauge")) out.gauge = make_gauge(j["gauge"]);
  return out;
}

json wrap_record(const std::string& format, json record, json meta) {
  return json{{"format", format},
              {"version", 1},
              {"record", std::move(record)},
              {"meta", std::move(meta)}};
}

const json& unwrap_record(const json& j, const std::string& format) {
  check_envelope(j, format, "record document");
  require_member(j, "record", "record document");
  return j["record"];
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot open for writing: " + path);
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorCode::io, "write failed: " + path);
}

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open for reading: " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) fail(ErrorCode::io, "invalid JSON: " + path);
  return j;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_density_csv(const std::string& path, const CapMesh& mesh, const ScalarField& values) {
  mesh.require_field(values, "write_density_csv");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot open for writing: " + path);
  out << (mesh.dim() == 1 ? "index,coordinate,height,value\n"
                          : "index,polar,azimuth,height,value\n");
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    auto pos = mesh.node_position(i);
    double height = mesh.dim() == 1 ? pos[1] : pos[2];
    out << i << ',';
    if (mesh.dim() == 1)
      out << format_double(mesh.signed_coord()[i]);
    else
      out << format_double(mesh.polar()[i]) << ',' << format_double(mesh.azimuth()[i]);
    out << ',' << format_double(height) << ',' << format_double(values[i]) << '\n';
  }
  if (!out) fail(ErrorCode::io, "write failed: " + path);
}

void write_trace_csv(const std::string& path, const SolveReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot open for writing: " + path);
  out << "t,dt,newton_iterations,final_residual,lambda,volume,min_h,min_eig\n";
  for (const auto& s : report.steps) {
    out << format_double(s.t) << ',' << format_double(s.dt) << ',' << s.newton_iterations << ','
        << format_double(s.final_residual) << ',' << format_double(s.lambda) << ','
        << format_double(s.volume) << ',' << format_double(s.min_h) << ','
        << format_double(s.min_eig) << '\n';
  }
  if (!out) fail(ErrorCode::io, "write failed: " + path);
}

}  // namespace capillary
