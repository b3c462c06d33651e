#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "core/functionals.hpp"
#include "core/io.hpp"
#include "core/random_bodies.hpp"
#include "core/solver.hpp"
#include "core/util.hpp"
#include "schema_check.hpp"
#include "test_helpers.hpp"

using namespace capillary;
using namespace capillary::testing;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("capillary-io-test-" + name);
}

nlohmann::json load_schema(const std::string& name) {
  std::ifstream in(std::string(SCHEMA_DIR) + "/" + name + ".schema.json");
  REQUIRE(in.good());
  return nlohmann::json::parse(in);
}

}  // namespace

TEST_CASE("mesh documents round-trip") {
  MeshPtr m = mesh2(24, 48, 1.1);
  nlohmann::json doc = mesh_to_json(*m);
  CHECK(schema_errors(doc, load_schema("capillary-mesh")).empty());
  MeshPtr back = mesh_from_json(doc);
  CHECK(back->compatible_with(*m));
  CHECK(back->theta().value() == m->theta().value());
}

TEST_CASE("body documents round-trip bit exactly") {
  MeshPtr m = mesh2(24, 48);
  SplitMix64 rng(21);
  BodyPtr body = random_body(rng, m);
  nlohmann::json doc = body_to_json(*body);
  CHECK(schema_errors(doc, load_schema("capillary-body")).empty());
  BodyPtr back = body_from_json(doc);
  CHECK(max_abs_diff(back->support(), body->support()) == 0.0);
  CHECK(volume(*back) == volume(*body));
}

TEST_CASE("density documents round-trip") {
  MeshPtr m = mesh2(24, 48);
  BodyPtr body = make_cap(m, 1.2);
  MeasureDensity density = lp_density(*body, 2.0);
  nlohmann::json doc = density_to_json(density);
  CHECK(schema_errors(doc, load_schema("capillary-density")).empty());
  MeasureDensity back = density_from_json(doc);
  CHECK(max_abs_diff(back.values, density.values) == 0.0);
  CHECK(back.kind == DensityKind::lp);
  CHECK(back.exponent == doctest::Approx(2.0));
}

TEST_CASE("record envelopes check their format") {
  nlohmann::json doc = wrap_record("capillary-test", nlohmann::json{{"x", 1}});
  CHECK(doc["version"] == 1);
  CHECK(unwrap_record(doc, "capillary-test")["x"] == 1);
  CHECK_THROWS_AS(unwrap_record(doc, "capillary-other"), Error);
  CHECK_THROWS_AS(unwrap_record(nlohmann::json{{"format", "capillary-test"}}, "capillary-test"),
                  Error);
}

TEST_CASE("json files round-trip and errors are typed") {
  auto path = temp_file("roundtrip.json");
  nlohmann::json doc = {{"a", 1.5}, {"b", "text"}};
  write_json_file(path.string(), doc);
  CHECK(read_json_file(path.string()) == doc);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(read_json_file(temp_file("missing.json").string()), Error);

  auto bad = temp_file("bad.json");
  std::ofstream(bad.string()) << "{ not json";
  CHECK_THROWS_AS(read_json_file(bad.string()), Error);
  std::filesystem::remove(bad);
}

TEST_CASE("serialized doubles parse back to the same bits") {
  for (double v : {0.1, 1.0 / 3.0, 3.141592653589793, 2.2250738585072014e-308, -1.0e-300,
                   1.7976931348623157e308, 0.0}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("identical bodies serialize to identical bytes") {
  MeshPtr m = mesh2(24, 48);
  SplitMix64 a(33), b(33);
  std::string da = body_to_json(*random_body(a, m)).dump();
  std::string db = body_to_json(*random_body(b, m)).dump();
  CHECK(da == db);
}

TEST_CASE("density csv has one row per node") {
  MeshPtr m = mesh2(16, 32);
  BodyPtr body = make_cap(m, 1.0);
  auto path = temp_file("density.csv");
  write_density_csv(path.string(), *m, surface_density(*body).values);
  std::ifstream in(path.string());
  std::string header;
  std::getline(in, header);
  CHECK(header == "index,polar,azimuth,height,value");
  int rows = 0;
  std::string line;
  while (std::getline(in, line)) rows += !line.empty();
  CHECK(rows == m->size());
  std::filesystem::remove(path);

  MeshPtr line_mesh = mesh1(65);
  auto path1 = temp_file("density1.csv");
  write_density_csv(path1.string(), *line_mesh, line_mesh->ell());
  std::ifstream in1(path1.string());
  std::getline(in1, header);
  CHECK(header == "index,coordinate,height,value");
  std::filesystem::remove(path1);
}

TEST_CASE("trace csv lists accepted homotopy steps in order") {
  MeshPtr m = mesh2(16, 32);
  ProblemData data = make_manufactured_problem(m, make_power_gauge(4.0), 1.2);
  SolverConfig config;
  config.run_diagnostics = false;
  SolveReport report = homotopy_solve(data, config);
  REQUIRE(report.converged);

  auto path = temp_file("trace.csv");
  write_trace_csv(path.string(), report);
  std::ifstream in(path.string());
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,dt,newton_iterations,final_residual,lambda,volume,min_h,min_eig");
  int rows = 0;
  double prev_t = -1.0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double t = std::stod(line.substr(0, line.find(',')));
    CHECK(t > prev_t);
    prev_t = t;
    ++rows;
  }
  CHECK(rows == static_cast<int>(report.steps.size()));
  std::filesystem::remove(path);
}
