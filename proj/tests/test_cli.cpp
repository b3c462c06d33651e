#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "schema_check.hpp"

#ifndef CLI_BINARY_PATH
#error "CLI_BINARY_PATH must point at the capillary executable"
#endif

using nlohmann::json;
using capillary::testing::load_schema;
using capillary::testing::schema_errors;

namespace {

namespace fs = std::filesystem;

constexpr double kPi = 3.14159265358979323846;

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Fresh working directory per test case so artifacts cannot collide.
fs::path fresh_dir(const std::string& label) {
  fs::path dir = fs::temp_directory_path() / ("capillary-cli-" + label);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

CliResult run_cli(const fs::path& dir, const std::string& args) {
  fs::path out = dir / "stdout.txt";
  fs::path err = dir / "stderr.txt";
  std::string command = std::string(CLI_BINARY_PATH) + " " + args + " > " + out.string() +
                        " 2> " + err.string();
  int status = std::system(command.c_str());
  CliResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = slurp(out);
  result.err = slurp(err);
  return result;
}

json record_of(const CliResult& result, const std::string& format) {
  json doc = json::parse(result.out);
  REQUIRE(doc.at("format").get<std::string>() == format);
  return doc.at("record");
}

std::vector<std::string> csv_lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("make-body cap emits a valid record and body file") {
  fs::path dir = fresh_dir("make-cap");
  fs::path body = dir / "body.json";
  CliResult result = run_cli(dir, "make-body cap --r 1 --out " + body.string());
  REQUIRE(result.exit_code == 0);

  json doc = json::parse(result.out);
  CHECK(schema_errors(doc, load_schema("capillary-make-body")).empty());
  json record = doc.at("record");
  CHECK(record.at("kind") == "cap");
  CHECK(record.at("validation").at("pass").get<bool>());
  CHECK(record.at("capillary_support").at("min").get<double>() == doctest::Approx(1.0));
  CHECK(record.at("capillary_support").at("max").get<double>() == doctest::Approx(1.0));

  json stored = json::parse(slurp(body));
  CHECK(schema_errors(stored, load_schema("capillary-body")).empty());
}

TEST_CASE("make-body rejects an impossible radius with exit code 2") {
  fs::path dir = fresh_dir("make-bad");
  CliResult result = run_cli(dir, "make-body cap --r -1");
  CHECK(result.exit_code == 2);
  CHECK(result.err.find("radius") != std::string::npos);
}

TEST_CASE("make-body perturbed stays inside the class at moderate amplitude") {
  fs::path dir = fresh_dir("make-pert");
  CliResult result = run_cli(dir, "make-body perturbed --eps 0.05 --mode cos2");
  REQUIRE(result.exit_code == 0);
  json record = record_of(result, "capillary-make-body");
  CHECK(record.at("validation").at("pass").get<bool>());
  CHECK(record.at("parameters").at("eps").get<double>() == doctest::Approx(0.05));
  // Genuinely perturbed: the capillary support is not constant.
  CHECK(record.at("capillary_support").at("max").get<double>() >
        record.at("capillary_support").at("min").get<double>() + 1e-4);
}

TEST_CASE("records are deterministic run to run") {
  fs::path dir = fresh_dir("determinism");
  CliResult first = run_cli(dir, "make-body cap --r 1.2");
  CliResult second = run_cli(dir, "make-body cap --r 1.2");
  REQUIRE(first.exit_code == 0);
  REQUIRE(second.exit_code == 0);
  // The meta block carries a timestamp; the record itself must be identical.
  CHECK(json::parse(first.out).at("record") == json::parse(second.out).at("record"));
}

TEST_CASE("measure reproduces the closed cap forms end to end") {
  fs::path dir = fresh_dir("measure");
  fs::path body = dir / "cap.json";
  REQUIRE(run_cli(dir, "make-body cap --r 1 --out " + body.string()).exit_code == 0);

  fs::path csv = dir / "surface.csv";
  CliResult result = run_cli(dir, "measure " + body.string() +
                                      " --density surface --density lp:2.5 --density-csv " +
                                      csv.string());
  REQUIRE(result.exit_code == 0);
  json doc = json::parse(result.out);
  CHECK(schema_errors(doc, load_schema("capillary-measure")).empty());
  json record = doc.at("record");

  double hat = 5.0 * kPi / 24.0;  // hat volume of the unit cap at theta = pi/3
  CHECK(record.at("volume").get<double>() == doctest::Approx(hat).epsilon(1e-7));
  CHECK(record.at("wetting_energy").get<double>() == doctest::Approx(3.0 * hat).epsilon(1e-7));
  REQUIRE(record.at("densities").size() == 2);
  CHECK(record.at("densities")[0].at("total").get<double>() ==
        doctest::Approx(record.at("wetting_energy").get<double>()).epsilon(1e-12));
  CHECK(record.at("densities")[1].at("exponent").get<double>() == doctest::Approx(2.5));

  auto lines = csv_lines(csv);
  REQUIRE(!lines.empty());
  CHECK(lines[0] == "index,polar,azimuth,height,value");
  CHECK(lines.size() == 1 + 48 * 96);
}

TEST_CASE("measure of a pair reports mixed volumes") {
  fs::path dir = fresh_dir("measure-pair");
  fs::path first = dir / "a.json";
  fs::path second = dir / "b.json";
  REQUIRE(run_cli(dir, "make-body cap --r 1 --out " + first.string()).exit_code == 0);
  REQUIRE(run_cli(dir, "make-body cap --r 2 --out " + second.string()).exit_code == 0);

  CliResult result =
      run_cli(dir, "measure " + first.string() + " " + second.string() + " --phi power:3");
  REQUIRE(result.exit_code == 0);
  json record = record_of(result, "capillary-measure");
  json pair = record.at("pair");
  double v = record.at("volume").get<double>();
  // V1(K, 2K) = 2 * V(K) by linearity in the support slot.
  CHECK(pair.at("v1").get<double>() == doctest::Approx(2.0 * v).epsilon(1e-10));
  CHECK(pair.at("second_volume").get<double>() == doctest::Approx(8.0 * v).epsilon(1e-10));
  // V_phi(K, 2K) = phi(2) * V(K) = 8 V(K) for the cubic gauge.
  CHECK(pair.at("orlicz_mixed_volume").get<double>() == doctest::Approx(8.0 * v).epsilon(1e-10));
  CHECK(pair.at("gauge") == "power:3");
}

TEST_CASE("combine takes the closed-form gauge mean of caps") {
  fs::path dir = fresh_dir("combine");
  fs::path first = dir / "a.json";
  fs::path second = dir / "b.json";
  fs::path out = dir / "mean.json";
  REQUIRE(run_cli(dir, "make-body cap --r 1 --out " + first.string()).exit_code == 0);
  REQUIRE(run_cli(dir, "make-body cap --r 2 --out " + second.string()).exit_code == 0);

  CliResult result = run_cli(dir, "combine " + first.string() + " " + second.string() +
                                      " --phi power:3 --alpha 0.5 --beta 0.5 --out " +
                                      out.string());
  REQUIRE(result.exit_code == 0);
  json doc = json::parse(result.out);
  CHECK(schema_errors(doc, load_schema("capillary-combine")).empty());
  json record = doc.at("record");
  CHECK(record.at("root_residual").get<double>() <= 1e-10);
  double expected = std::cbrt(0.5 + 0.5 * 8.0);
  CHECK(record.at("capillary_support").at("min").get<double>() ==
        doctest::Approx(expected).epsilon(1e-9));
  CHECK(record.at("capillary_support").at("max").get<double>() ==
        doctest::Approx(expected).epsilon(1e-9));

  // Mixing meshes is refused before any arithmetic runs.
  fs::path fine = dir / "fine.json";
  REQUIRE(run_cli(dir, "make-body cap --r 1 --resolution 16x32 --out " + fine.string())
              .exit_code == 0);
  CliResult mixed = run_cli(dir, "combine " + first.string() + " " + fine.string());
  CHECK(mixed.exit_code == 2);
  CHECK(mixed.err.find("mesh") != std::string::npos);
}

TEST_CASE("verify runs a full seeded suite") {
  fs::path dir = fresh_dir("verify");
  CliResult result = run_cli(dir, "verify --suite orlicz-minkowski --seed 7 --pairs 100");
  REQUIRE(result.exit_code == 0);
  json doc = json::parse(result.out);
  CHECK(schema_errors(doc, load_schema("capillary-verify-run")).empty());
  json record = doc.at("record");
  CHECK(record.at("pass").get<bool>());
  REQUIRE(record.at("suites").size() == 1);
  CHECK(record.at("suites")[0].at("failures").get<int>() == 0);
  CHECK(record.at("suites")[0].at("total").get<int>() == 200);  // two default gauges
}

TEST_CASE("geometry suites run past the right angle but solver checks refuse") {
  fs::path dir = fresh_dir("verify-wide");
  CliResult geometry = run_cli(dir, "verify --suite obm --theta 2.0 --pairs 5");
  CHECK(geometry.exit_code == 0);

  CliResult solver = run_cli(dir, "verify --suite solver --theta 2.0");
  CHECK(solver.exit_code == 2);
  CHECK(solver.err.find("pi/2") != std::string::npos);

  CliResult af = run_cli(dir, "verify --suite af --n 1");
  CHECK(af.exit_code == 2);
  CHECK(af.err.find("2-d") != std::string::npos);
}

TEST_CASE("solve recovers a manufactured cap and logs its trace") {
  fs::path dir = fresh_dir("solve");
  fs::path body = dir / "solved.json";
  fs::path report = dir / "report.json";
  fs::path trace = dir / "trace.csv";
  CliResult result = run_cli(
      dir, "solve --phi power:4 --f manufactured:r=1.3 --resolution 16x32 --out " +
               body.string() + " --report " + report.string() + " --trace " + trace.string());
  REQUIRE(result.exit_code == 0);

  json doc = json::parse(result.out);
  CHECK(schema_errors(doc, load_schema("capillary-solve-run")).empty());
  json record = doc.at("record");
  CHECK(record.at("converged").get<bool>());
  CHECK(record.at("exit_status") == "ok");
  CHECK(json::parse(slurp(report)) == doc);

  auto lines = csv_lines(trace);
  REQUIRE(lines.size() >= 2);
  CHECK(lines[0] == "t,dt,newton_iterations,final_residual,lambda,volume,min_h,min_eig");
  double last_t = -1.0;
  for (size_t i = 1; i < lines.size(); ++i) {
    double t = std::stod(lines[i].substr(0, lines[i].find(',')));
    CHECK(t > last_t);
    last_t = t;
  }
  CHECK(last_t == doctest::Approx(1.0));

  // The solved body feeds back into measure and lands on the scaled cap volume.
  CliResult measured = run_cli(dir, "measure " + body.string());
  REQUIRE(measured.exit_code == 0);
  double hat = 5.0 * kPi / 24.0;
  CHECK(record_of(measured, "capillary-measure").at("volume").get<double>() ==
        doctest::Approx(1.3 * 1.3 * 1.3 * hat).epsilon(1e-4));
}

TEST_CASE("a stalled solve exits 3 but still writes its report") {
  fs::path dir = fresh_dir("solve-stall");
  fs::path report = dir / "report.json";
  CliResult result = run_cli(dir,
                             "solve --phi power:4 --f manufactured:r=1.3 --resolution 16x32 "
                             "--newton-max-iter 1 --dt-min 0.1 --report " +
                                 report.string());
  CHECK(result.exit_code == 3);
  json record = json::parse(slurp(report)).at("record");
  CHECK(!record.at("converged").get<bool>());
  CHECK(record.at("exit_status") == "stall");
  CHECK(record.at("report").at("stall_reason").get<std::string>().find("underflow") !=
        std::string::npos);
}

TEST_CASE("sweep fans out over radii and summarizes to csv") {
  fs::path dir = fresh_dir("sweep");
  fs::path csv = dir / "sweep.csv";
  CliResult result = run_cli(dir,
                             "sweep --param radius --values 1.0,1.3 --phi power:4 "
                             "--resolution 16x32 --jobs 2 --out-csv " +
                                 csv.string());
  REQUIRE(result.exit_code == 0);
  json doc = json::parse(result.out);
  CHECK(schema_errors(doc, load_schema("capillary-sweep")).empty());
  json record = doc.at("record");
  REQUIRE(record.at("runs").size() == 2);
  for (const json& run : record.at("runs")) CHECK(run.at("status") == "ok");

  auto lines = csv_lines(csv);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "param,value,status,last_good_t,final_residual,volume,lambda,steps");
  CHECK(lines[1].substr(0, 7) == "radius,");
}

TEST_CASE("config files feed defaults and flags still win") {
  fs::path dir = fresh_dir("config");
  fs::path toml = dir / "cfg.toml";
  {
    std::ofstream out(toml);
    out << "[make-body]\nr = 1.25\n";
  }
  CliResult from_toml = run_cli(dir, "make-body cap --config " + toml.string());
  REQUIRE(from_toml.exit_code == 0);
  CHECK(record_of(from_toml, "capillary-make-body").at("parameters").at("r").get<double>() ==
        doctest::Approx(1.25));

  fs::path jsonc = dir / "cfg.json";
  {
    std::ofstream out(jsonc);
    out << R"({"make-body": {"r": 1.75}})";
  }
  CliResult from_json = run_cli(dir, "make-body cap --config " + jsonc.string());
  REQUIRE(from_json.exit_code == 0);
  CHECK(record_of(from_json, "capillary-make-body").at("parameters").at("r").get<double>() ==
        doctest::Approx(1.75));

  CliResult overridden = run_cli(dir, "make-body cap --r 1.5 --config " + toml.string());
  REQUIRE(overridden.exit_code == 0);
  CHECK(record_of(overridden, "capillary-make-body").at("parameters").at("r").get<double>() ==
        doctest::Approx(1.5));
}

TEST_CASE("usage errors exit 2") {
  fs::path dir = fresh_dir("usage");
  CHECK(run_cli(dir, "frobnicate").exit_code == 2);
  CHECK(run_cli(dir, "make-body cap --no-such-flag").exit_code == 2);
  CHECK(run_cli(dir, "measure " + (dir / "missing.json").string()).exit_code == 2);
  CHECK(run_cli(dir, "").exit_code == 2);  // a subcommand is required
  CHECK(run_cli(dir, "--help").exit_code == 0);
  CHECK(run_cli(dir, "make-body --help").exit_code == 0);
}
