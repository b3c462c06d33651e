// Command-line front end for the capillary convex body library. Everything
// domain-specific goes through the C API in capillary/capillary.h; this file
// only parses flags, moves JSON around, and formats files.

#include <capillary/capillary.h>

#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitStall = 3;

constexpr double kPi = 3.14159265358979323846;
constexpr double kDefaultTheta = 1.0471975511965976;  // pi/3

struct CliError {
  int code;
  std::string message;
};

[[noreturn]] void die(int code, std::string message) { throw CliError{code, std::move(message)}; }

int exit_code_for(cap_status status) {
  return status == CAP_ERR_SOLVER_STALL ? kExitStall : kExitInvalid;
}

void check(cap_status status, const std::string& context) {
  if (status == CAP_OK) return;
  std::string detail = cap_last_error_message();
  die(exit_code_for(status),
      context + ": " + cap_status_name(status) + (detail.empty() ? "" : " (" + detail + ")"));
}

// Owned string coming back from the library.
struct OwnedString {
  char* ptr = nullptr;
  ~OwnedString() { cap_string_free(ptr); }
  std::string str() const { return ptr != nullptr ? std::string(ptr) : std::string(); }
};

using MeshHolder = std::unique_ptr<cap_mesh, decltype(&cap_mesh_free)>;
using BodyHolder = std::unique_ptr<cap_body, decltype(&cap_body_free)>;
using GaugeHolder = std::unique_ptr<cap_gauge, decltype(&cap_gauge_free)>;

BodyHolder no_body() { return BodyHolder(nullptr, &cap_body_free); }

json parse_json_text(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) die(kExitInvalid, what + ": invalid JSON");
  return j;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) die(kExitInvalid, "cannot open for reading: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) die(kExitInvalid, "cannot open for writing: " + path);
  out << text;
  if (!out) die(kExitInvalid, "write failed: " + path);
}

std::string theta_text(double theta) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.10g", theta);
  return buf;
}

std::string now_utc() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Record/meta envelope shared with the library's file formats. Everything
// run-dependent but input-independent (the timestamp) stays inside meta so
// reruns with the same inputs produce byte-identical records.
json wrap(const std::string& format, json record) {
  return json{{"format", format},
              {"version", 1},
              {"record", std::move(record)},
              {"meta", json{{"timestamp", now_utc()}, {"tool", "capillary"},
                            {"library_version", cap_version()}}}};
}

void emit(const json& doc, const std::string& out_path) {
  std::string text = doc.dump(2) + "\n";
  if (!out_path.empty()) write_text(out_path, text);
  std::cout << text;
}

/* ------------------------------------------------------------------ */
/* Config file support: TOML through CLI11's reader, JSON by sniffing. */

class JsonOrTomlConfig : public CLI::ConfigTOML {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::streampos start = input.tellg();
    char c = 0;
    while (input.get(c) && std::isspace(static_cast<unsigned char>(c))) {
    }
    input.clear();
    input.seekg(start);
    if (c == '{') {
      json j = json::parse(input, nullptr, false);
      if (!j.is_discarded() && j.is_object()) {
        std::vector<CLI::ConfigItem> items;
        flatten(j, {}, items);
        return items;
      }
      input.clear();
      input.seekg(start);
    }
    return CLI::ConfigTOML::from_config(input);
  }

 private:
  static std::string scalar_text(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void flatten(const json& j, std::vector<std::string> parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const json& v = it.value();
      if (v.is_object()) {
        std::vector<std::string> next = parents;
        next.push_back(it.key());
        flatten(v, std::move(next), items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = it.key();
      if (v.is_array())
        for (const json& e : v) item.inputs.push_back(scalar_text(e));
      else
        item.inputs.push_back(scalar_text(v));
      items.push_back(std::move(item));
    }
  }
};

/* ------------------------------------------------------------------ */
/* Shared argument groups                                              */

struct MeshArgs {
  double theta = kDefaultTheta;
  int dim = 2;
  std::string resolution;  // empty: dimension default
};

void add_mesh_options(CLI::App* cmd, MeshArgs& args) {
  cmd->add_option("--theta", args.theta, "Contact angle in radians (no degrees)")
      ->capture_default_str();
  cmd->add_option("--n", args.dim, "Tangential dimension of the cap (1 or 2)")
      ->check(CLI::IsMember({1, 2}))
      ->capture_default_str();
  cmd->add_option("--resolution", args.resolution,
                  "Mesh resolution: RINGSxAZIMUTHS for --n 2 (default 48x96), node count for "
                  "--n 1 (default 2049)");
}

std::pair<int, int> parse_resolution(const std::string& text, int dim) {
  std::string value = text;
  if (value.empty()) value = dim == 2 ? "48x96" : "2049";
  auto to_int = [&](const std::string& s) {
    if (s.empty()) die(kExitInvalid, "bad resolution '" + text + "'");
    for (char ch : s)
      if (!std::isdigit(static_cast<unsigned char>(ch)))
        die(kExitInvalid, "bad resolution '" + text + "'");
    return std::stoi(s);
  };
  size_t x = value.find_first_of("xX");
  if (x == std::string::npos) return {to_int(value), 0};
  if (dim == 1) die(kExitInvalid, "1-d meshes take a plain node count, not '" + text + "'");
  return {to_int(value.substr(0, x)), to_int(value.substr(x + 1))};
}

MeshHolder make_mesh(const MeshArgs& args) {
  auto [rings, azimuths] = parse_resolution(args.resolution, args.dim);
  cap_mesh* mesh = nullptr;
  check(cap_mesh_create(args.dim, args.theta, rings, azimuths, &mesh), "mesh");
  return MeshHolder(mesh, &cap_mesh_free);
}

json mesh_descriptor(const cap_mesh* mesh) {
  OwnedString text;
  check(cap_mesh_to_json(mesh, &text.ptr), "mesh");
  return parse_json_text(text.str(), "mesh document");
}

/* ------------------------------------------------------------------ */
/* Spec string parsing                                                 */

// Gauge specs: inline JSON, a JSON file, "power:P", "power-sum:1x3+0.5x4",
// or a bare exponent.
json parse_gauge_spec(const std::string& text) {
  if (text.empty()) die(kExitInvalid, "empty gauge spec");
  if (text.front() == '{') return parse_json_text(text, "gauge spec");
  if (text.size() > 5 && text.substr(text.size() - 5) == ".json")
    return parse_json_text(read_text(text), "gauge spec file " + text);
  auto to_double = [&](const std::string& s) {
    try {
      size_t used = 0;
      double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      die(kExitInvalid, "bad number '" + s + "' in gauge spec '" + text + "'");
    }
  };
  if (text.rfind("power:", 0) == 0) return json{{"kind", "power"}, {"p", to_double(text.substr(6))}};
  if (text.rfind("power-sum:", 0) == 0) {
    json terms = json::array();
    std::stringstream ss(text.substr(10));
    std::string term;
    while (std::getline(ss, term, '+')) {
      size_t x = term.find_first_of("xX");
      if (x == std::string::npos)
        die(kExitInvalid, "gauge spec terms look like COEFxEXP, got '" + term + "'");
      terms.push_back(json::array({to_double(term.substr(0, x)), to_double(term.substr(x + 1))}));
    }
    if (terms.empty()) die(kExitInvalid, "gauge spec '" + text + "' has no terms");
    return json{{"kind", "power_sum"}, {"terms", std::move(terms)}};
  }
  return json{{"kind", "power"}, {"p", to_double(text)}};
}

GaugeHolder make_gauge(const json& spec) {
  cap_gauge* gauge = nullptr;
  check(cap_gauge_create(spec.dump().c_str(), &gauge), "gauge");
  return GaugeHolder(gauge, &cap_gauge_free);
}

// Data specs for solve: "manufactured:r=R" (or manufactured:R),
// "equality-case", or a JSON file holding a density document or an array.
json parse_data_spec(const std::string& text) {
  if (text.empty()) die(kExitInvalid, "empty data spec");
  if (text == "equality-case") return json{{"type", "equality-case"}};
  if (text.rfind("manufactured:", 0) == 0) {
    std::string arg = text.substr(13);
    if (arg.rfind("r=", 0) == 0) arg = arg.substr(2);
    try {
      size_t used = 0;
      double r = std::stod(arg, &used);
      if (used != arg.size()) throw std::invalid_argument(arg);
      return json{{"type", "manufactured"}, {"radius", r}};
    } catch (const std::exception&) {
      die(kExitInvalid, "bad manufactured radius in '" + text + "'");
    }
  }
  json j = parse_json_text(read_text(text), "data file " + text);
  if (j.is_array()) return json{{"type", "values"}, {"values", std::move(j)}};
  if (j.is_object() && j.value("format", "") == "capillary-density" && j.contains("values"))
    return json{{"type", "values"}, {"values", j["values"]}};
  die(kExitInvalid, "data file " + text + " is neither a values array nor a density document");
}

/* ------------------------------------------------------------------ */
/* Body plumbing                                                       */

BodyHolder load_body(const std::string& path) {
  cap_body* body = nullptr;
  check(cap_body_from_json(read_text(path).c_str(), &body), "body file " + path);
  return BodyHolder(body, &cap_body_free);
}

void write_body(const cap_body* body, const std::string& path) {
  OwnedString text;
  check(cap_body_to_json(body, &text.ptr), "body");
  write_text(path, text.str() + "\n");
}

json validate_body(const cap_body* body, bool* pass) {
  int ok = 0;
  OwnedString report;
  check(cap_body_validate_json(body, "{}", &ok, &report.ptr), "validation");
  if (pass != nullptr) *pass = ok != 0;
  return parse_json_text(report.str(), "validation report");
}

std::vector<double> support_of(const cap_body* body) {
  std::vector<double> h(static_cast<size_t>(cap_body_node_count(body)));
  check(cap_body_support(body, h.data(), static_cast<int64_t>(h.size())), "support");
  return h;
}

std::vector<double> capillary_support_of(const cap_body* body) {
  std::vector<double> u(static_cast<size_t>(cap_body_node_count(body)));
  check(cap_body_capillary_support(body, u.data(), static_cast<int64_t>(u.size())), "support");
  return u;
}

double volume_of(const cap_body* body) {
  double v = 0.0;
  check(cap_volume(body, &v), "volume");
  return v;
}

/* ------------------------------------------------------------------ */
/* make-body                                                           */

struct MakeBodyArgs {
  MeshArgs mesh;
  std::string kind;  // positional: cap | perturbed
  double r = 1.0;
  double eps = 0.05;
  std::string mode = "cos2";
  std::string out = "body.json";
};

int run_make_body(const MakeBodyArgs& args) {
  MeshHolder mesh = make_mesh(args.mesh);

  BodyHolder body = no_body();
  json parameters;
  if (args.kind == "cap") {
    cap_body* raw = nullptr;
    check(cap_body_cap(mesh.get(), args.r, &raw), "make-body cap");
    body.reset(raw);
    parameters = {{"r", args.r}};
  } else {
    std::vector<double> g(static_cast<size_t>(cap_mesh_node_count(mesh.get())));
    check(cap_mesh_perturbation_mode(mesh.get(), args.mode.c_str(), g.data(),
                                     static_cast<int64_t>(g.size())),
          "make-body perturbed");
    cap_body* raw = nullptr;
    check(cap_body_perturbed_cap(mesh.get(), g.data(), static_cast<int64_t>(g.size()), args.eps,
                                 &raw),
          "make-body perturbed");
    body.reset(raw);
    if (args.r != 1.0) {
      cap_body* scaled = nullptr;
      check(cap_body_scale(body.get(), args.r, &scaled), "make-body perturbed");
      body.reset(scaled);
    }
    parameters = {{"r", args.r}, {"eps", args.eps}, {"mode", args.mode}};
  }

  bool valid = false;
  json validation = validate_body(body.get(), &valid);
  write_body(body.get(), args.out);

  std::vector<double> u = capillary_support_of(body.get());
  double umin = u[0], umax = u[0];
  for (double v : u) {
    umin = std::min(umin, v);
    umax = std::max(umax, v);
  }

  json record{{"kind", args.kind},
              {"parameters", parameters},
              {"mesh", mesh_descriptor(mesh.get())},
              {"theta_text", theta_text(args.mesh.theta)},
              {"output", args.out},
              {"capillary_support", json{{"min", umin}, {"max", umax}}},
              {"validation", validation}};
  emit(wrap("capillary-make-body", std::move(record)), "");
  std::cerr << "make-body " << args.kind << ": theta = " << theta_text(args.mesh.theta)
            << ", wrote " << args.out << (valid ? " (valid)" : " (INVALID)") << "\n";
  return valid ? kExitOk : kExitInvalid;
}

/* ------------------------------------------------------------------ */
/* measure                                                             */

struct MeasureArgs {
  std::string body;
  std::string second;
  std::vector<std::string> densities;
  std::string phi;
  std::string density_csv;
  std::string density_out;
  std::string out;
};

json measure_density(const cap_body* body, const std::string& request, const std::string& phi,
                     const std::string& csv_path, const std::string& doc_path) {
  json options;
  if (request == "surface" || request == "cone-volume") {
    options = {{"kind", request}};
  } else if (request.rfind("lp:", 0) == 0) {
    try {
      options = {{"kind", "lp"}, {"exponent", std::stod(request.substr(3))}};
    } catch (const std::exception&) {
      die(kExitInvalid, "bad lp exponent in density request '" + request + "'");
    }
  } else if (request == "orlicz") {
    if (phi.empty()) die(kExitInvalid, "density 'orlicz' needs --phi");
    options = {{"kind", "orlicz"}, {"gauge", parse_gauge_spec(phi)}};
  } else {
    die(kExitInvalid, "unknown density '" + request +
                          "' (expected surface, lp:P, orlicz, or cone-volume)");
  }

  OwnedString text;
  check(cap_density_json(body, options.dump().c_str(), &text.ptr), "density " + request);
  json doc = parse_json_text(text.str(), "density document");
  if (!doc_path.empty()) write_text(doc_path, doc.dump(2) + "\n");
  if (!csv_path.empty()) {
    std::vector<double> values = doc.at("values").get<std::vector<double>>();
    cap_mesh* raw = nullptr;
    check(cap_body_mesh(body, &raw), "density mesh");
    MeshHolder mesh(raw, &cap_mesh_free);
    check(cap_write_density_csv(mesh.get(), values.data(), static_cast<int64_t>(values.size()),
                                csv_path.c_str()),
          "density csv");
  }

  json entry{{"kind", doc.at("kind")}, {"total", doc.at("total")}};
  if (doc.contains("exponent")) entry["exponent"] = doc["exponent"];
  if (doc.contains("gauge")) entry["gauge"] = doc["gauge"];
  if (!csv_path.empty()) entry["csv"] = csv_path;
  if (!doc_path.empty()) entry["document"] = doc_path;
  return entry;
}

int run_measure(const MeasureArgs& args) {
  BodyHolder body = load_body(args.body);
  cap_mesh* raw_mesh = nullptr;
  check(cap_body_mesh(body.get(), &raw_mesh), "measure");
  MeshHolder mesh(raw_mesh, &cap_mesh_free);
  double theta = cap_mesh_theta(mesh.get());

  double volume = volume_of(body.get());
  double wetting = 0.0;
  check(cap_wetting_energy(body.get(), &wetting), "wetting energy");

  json densities = json::array();
  for (size_t i = 0; i < args.densities.size(); ++i)
    densities.push_back(measure_density(body.get(), args.densities[i], args.phi,
                                        i == 0 ? args.density_csv : "",
                                        i == 0 ? args.density_out : ""));

  json record{{"body", args.body},
              {"mesh", mesh_descriptor(mesh.get())},
              {"theta_text", theta_text(theta)},
              {"volume", volume},
              {"wetting_energy", wetting},
              {"densities", densities}};

  if (!args.second.empty()) {
    BodyHolder second = load_body(args.second);
    double v1 = 0.0;
    check(cap_v1(body.get(), second.get(), &v1), "mixed volume");
    json pair{{"second", args.second}, {"v1", v1}, {"second_volume", volume_of(second.get())}};
    if (!args.phi.empty()) {
      GaugeHolder gauge = make_gauge(parse_gauge_spec(args.phi));
      double vphi = 0.0;
      check(cap_orlicz_mixed_volume(gauge.get(), body.get(), second.get(), &vphi), "mixed volume");
      OwnedString label;
      check(cap_gauge_label(gauge.get(), &label.ptr), "gauge");
      pair["orlicz_mixed_volume"] = vphi;
      pair["gauge"] = label.str();
    }
    record["pair"] = std::move(pair);
  }

  emit(wrap("capillary-measure", std::move(record)), args.out);
  std::cerr << "measure: theta = " << theta_text(theta) << ", volume = " << volume << "\n";
  return kExitOk;
}

/* ------------------------------------------------------------------ */
/* combine                                                             */

struct CombineArgs {
  std::string first;
  std::string second;
  std::string phi = "power:3";
  double alpha = 1.0;
  double beta = 1.0;
  std::string out = "combined.json";
};

int run_combine(const CombineArgs& args) {
  BodyHolder first = load_body(args.first);
  BodyHolder second = load_body(args.second);
  json spec = parse_gauge_spec(args.phi);
  GaugeHolder gauge = make_gauge(spec);

  cap_body* raw = nullptr;
  check(cap_body_combine(gauge.get(), args.alpha, first.get(), args.beta, second.get(), &raw),
        "combine");
  BodyHolder combined(raw, &cap_body_free);

  bool valid = false;
  json validation = validate_body(combined.get(), &valid);
  write_body(combined.get(), args.out);

  // Defect of the defining relation alpha*phi(h1/h) + beta*phi(h2/h) = 1,
  // evaluated independently of the combiner.
  std::vector<double> h = support_of(combined.get());
  std::vector<double> h1 = support_of(first.get());
  std::vector<double> h2 = support_of(second.get());
  double root_residual = 0.0;
  for (size_t i = 0; i < h.size(); ++i) {
    double p1 = 0.0, p2 = 0.0;
    check(cap_gauge_value(gauge.get(), h1[i] / h[i], &p1), "combine");
    check(cap_gauge_value(gauge.get(), h2[i] / h[i], &p2), "combine");
    root_residual = std::max(root_residual, std::abs(args.alpha * p1 + args.beta * p2 - 1.0));
  }

  cap_mesh* raw_mesh = nullptr;
  check(cap_body_mesh(combined.get(), &raw_mesh), "combine");
  MeshHolder mesh(raw_mesh, &cap_mesh_free);
  OwnedString label;
  check(cap_gauge_label(gauge.get(), &label.ptr), "gauge");

  json record{{"first", args.first},
              {"second", args.second},
              {"gauge", spec},
              {"gauge_label", label.str()},
              {"alpha", args.alpha},
              {"beta", args.beta},
              {"mesh", mesh_descriptor(mesh.get())},
              {"theta_text", theta_text(cap_mesh_theta(mesh.get()))},
              {"output", args.out},
              {"volume", volume_of(combined.get())},
              {"root_residual", root_residual},
              {"validation", validation}};
  emit(wrap("capillary-combine", std::move(record)), "");
  std::cerr << "combine: root residual " << root_residual << ", wrote " << args.out
            << (valid ? " (valid)" : " (INVALID)") << "\n";
  return valid ? kExitOk : kExitInvalid;
}

/* ------------------------------------------------------------------ */
/* solve plumbing shared by solve, sweep, and the verify solver suite  */

struct SolveSpec {
  MeshArgs mesh;
  json phi;
  json f;
  std::string form;  // empty: library default for the data kind
  json config = json::object();
  std::string trace_csv;
};

json solve_options(const SolveSpec& spec) {
  auto [rings, azimuths] = parse_resolution(spec.mesh.resolution, spec.mesh.dim);
  json options{{"mesh", json{{"dim", spec.mesh.dim},
                             {"theta", spec.mesh.theta},
                             {"rings", rings},
                             {"azimuths", azimuths}}},
               {"phi", spec.phi},
               {"f", spec.f}};
  if (!spec.form.empty()) options["form"] = spec.form;
  if (!spec.config.empty()) options["config"] = spec.config;
  if (!spec.trace_csv.empty()) options["trace_csv"] = spec.trace_csv;
  return options;
}

struct SolveOutcome {
  cap_status status = CAP_OK;
  json report_doc;  // full wrapped capillary-solve document
  BodyHolder body = no_body();
};

SolveOutcome run_solve_spec(const SolveSpec& spec) {
  SolveOutcome outcome;
  OwnedString report;
  cap_body* raw = nullptr;
  outcome.status = cap_solve_json(solve_options(spec).dump().c_str(), &report.ptr, &raw);
  outcome.body.reset(raw);
  if (outcome.status != CAP_OK && outcome.status != CAP_ERR_SOLVER_STALL)
    check(outcome.status, "solve");
  outcome.report_doc = parse_json_text(report.str(), "solve report");
  return outcome;
}

const json& solve_record(const SolveOutcome& outcome) { return outcome.report_doc.at("record"); }

/* ------------------------------------------------------------------ */
/* verify                                                              */

struct VerifyArgs {
  MeshArgs mesh;
  std::string suite = "all";
  uint64_t seed = 7;
  int pairs = 100;
  double slack_rel = 1e-8;
  double eq_tol_rel = 1e-9;
  std::vector<std::string> gauges;
};

std::vector<std::string> geometry_suites() {
  std::vector<std::string> names;
  OwnedString text;
  check(cap_suite_names_json(&text.ptr), "verify");
  for (const json& name : parse_json_text(text.str(), "suite names")) names.push_back(name);
  return names;
}

json run_geometry_suite(const std::string& name, const VerifyArgs& args) {
  auto [rings, azimuths] = parse_resolution(args.mesh.resolution, args.mesh.dim);
  json options{{"suite", name},
               {"mesh", json{{"dim", args.mesh.dim},
                             {"theta", args.mesh.theta},
                             {"rings", rings},
                             {"azimuths", azimuths}}},
               {"seed", args.seed},
               {"pairs", args.pairs},
               {"check", json{{"slack_rel", args.slack_rel}, {"eq_tol_rel", args.eq_tol_rel}}}};
  if (!args.gauges.empty()) {
    json specs = json::array();
    for (const std::string& g : args.gauges) specs.push_back(parse_gauge_spec(g));
    options["gauges"] = std::move(specs);
  }
  int pass = 0;
  OwnedString report;
  check(cap_verify_json(options.dump().c_str(), &pass, &report.ptr), "verify suite " + name);
  return parse_json_text(report.str(), "verify report").at("record");
}

// Solver-coupled spot checks: manufactured recovery with a well-posed gauge,
// the equality-case normalized solve, and the scale-family representative for
// the degree-(n+1) gauge. Each solves at the requested mesh.
json run_solver_suite(const VerifyArgs& args) {
  json reports = json::array();
  MeshHolder mesh = make_mesh(args.mesh);
  double stencil = 0.0;
  check(cap_mesh_stencil_error(mesh.get(), &stencil), "verify solver");
  int n = args.mesh.dim;

  auto push = [&](const std::string& name, bool pass, json details) {
    reports.push_back(json{{"name", name}, {"pass", pass}, {"details", std::move(details)}});
  };

  {  // Recovery of a prescribed cap with the next-higher power gauge.
    const double radius = 1.3;
    SolveSpec spec{args.mesh,
                   json{{"kind", "power"}, {"p", double(n + 2)}},
                   json{{"type", "manufactured"}, {"radius", radius}},
                   "unnormalized",
                   json::object(),
                   ""};
    SolveOutcome outcome = run_solve_spec(spec);
    double err = -1.0;
    if (outcome.body) {
      cap_body* raw = nullptr;
      check(cap_body_cap(mesh.get(), radius, &raw), "verify solver");
      BodyHolder expected(raw, &cap_body_free);
      std::vector<double> h = support_of(outcome.body.get());
      std::vector<double> href = support_of(expected.get());
      err = 0.0;
      for (size_t i = 0; i < h.size(); ++i)
        err = std::max(err, std::abs(h[i] - href[i]) / radius);
    }
    double tol = 50.0 * stencil;
    bool converged = solve_record(outcome).value("converged", false);
    push("solver-manufactured-recovery", outcome.status == CAP_OK && converged && err >= 0.0 &&
                                             err <= tol,
         json{{"radius", radius}, {"gauge_power", n + 2}, {"max_rel_error", err}, {"tol", tol},
              {"converged", converged}});
  }

  {  // Equality-case data: normalized solve lands on the unit-volume cap.
    SolveSpec spec{args.mesh,
                   json{{"kind", "power"}, {"p", double(n + 1)}},
                   json{{"type", "equality-case"}},
                   "",
                   json::object(),
                   ""};
    SolveOutcome outcome = run_solve_spec(spec);
    const json& rec = solve_record(outcome);
    double volume = rec.value("volume", 0.0);
    double margin = rec.value("admissibility_margin", 1.0);
    double deviation = -1.0;
    if (outcome.body) {
      cap_body* unit_raw = nullptr;
      check(cap_body_cap(mesh.get(), 1.0, &unit_raw), "verify solver");
      BodyHolder unit(unit_raw, &cap_body_free);
      double rho = std::pow(volume_of(unit.get()), -1.0 / (n + 1));
      cap_body* cap_raw = nullptr;
      check(cap_body_cap(mesh.get(), rho, &cap_raw), "verify solver");
      BodyHolder expected(cap_raw, &cap_body_free);
      std::vector<double> h = support_of(outcome.body.get());
      std::vector<double> href = support_of(expected.get());
      deviation = 0.0;
      for (size_t i = 0; i < h.size(); ++i) deviation = std::max(deviation, std::abs(h[i] - href[i]));
    }
    bool converged = rec.value("converged", false);
    push("solver-equality-case",
         outcome.status == CAP_OK && converged && std::abs(volume - 1.0) <= 1e-6 &&
             std::abs(margin) <= 1e-8 && deviation >= 0.0 && deviation <= 1e-3,
         json{{"volume", volume}, {"admissibility_margin", margin},
              {"max_deviation_from_cap", deviation}, {"converged", converged}});
  }

  {  // Degree-(n+1) gauge: the data only pins the shape family, so check the
     // solution is a cap up to scale.
    SolveSpec spec{args.mesh,
                   json{{"kind", "power"}, {"p", double(n + 1)}},
                   json{{"type", "manufactured"}, {"radius", 1.5}},
                   "unnormalized",
                   json::object(),
                   ""};
    SolveOutcome outcome = run_solve_spec(spec);
    double spread = -1.0;
    if (outcome.body) {
      std::vector<double> u = capillary_support_of(outcome.body.get());
      double umin = u[0], umax = u[0];
      for (double v : u) {
        umin = std::min(umin, v);
        umax = std::max(umax, v);
      }
      spread = (umax - umin) / std::max(1e-300, 0.5 * (umax + umin));
    }
    double tol = 50.0 * stencil;
    bool converged = solve_record(outcome).value("converged", false);
    push("solver-scale-family", outcome.status == CAP_OK && converged && spread >= 0.0 &&
                                    spread <= tol,
         json{{"gauge_power", n + 1}, {"capillary_support_spread", spread}, {"tol", tol},
              {"converged", converged}});
  }

  int failures = 0;
  for (const json& r : reports)
    if (!r.at("pass").get<bool>()) ++failures;
  return json{{"suite", "solver"},
              {"total", static_cast<int>(reports.size())},
              {"failures", failures},
              {"pass", failures == 0},
              {"reports", std::move(reports)}};
}

int run_verify(const VerifyArgs& args) {
  bool solver_allowed = args.mesh.theta < kPi / 2.0 - 1e-12;
  std::string solver_refusal =
      "contact angle " + theta_text(args.mesh.theta) +
      " is not below pi/2, where the solve hypotheses fail; solver-coupled checks are refused "
      "(geometry suites still run at this angle)";
  std::string af_refusal = "the af suite needs the 2-d cap (pass --n 2)";

  std::vector<std::string> selected;
  json skipped = json::array();
  if (args.suite == "all") {
    for (const std::string& name : geometry_suites()) {
      if (name == "af" && args.mesh.dim != 2)
        skipped.push_back(json{{"suite", name}, {"reason", af_refusal}});
      else
        selected.push_back(name);
    }
    if (solver_allowed)
      selected.push_back("solver");
    else
      skipped.push_back(json{{"suite", "solver"}, {"reason", solver_refusal}});
  } else if (args.suite == "solver") {
    if (!solver_allowed) die(kExitInvalid, solver_refusal);
    selected.push_back("solver");
  } else {
    if (args.suite == "af" && args.mesh.dim != 2) die(kExitInvalid, af_refusal);
    selected.push_back(args.suite);
  }

  // Suites are independent and internally seeded per pair, so they can run
  // concurrently; results are collected in request order.
  std::vector<std::future<json>> futures;
  futures.reserve(selected.size());
  for (const std::string& name : selected)
    futures.push_back(std::async(std::launch::async, [&, name] {
      return name == "solver" ? run_solver_suite(args) : run_geometry_suite(name, args);
    }));

  json suites = json::array();
  bool all_pass = true;
  for (size_t i = 0; i < futures.size(); ++i) {
    json record = futures[i].get();
    bool pass = record.value("pass", false);
    all_pass = all_pass && pass;
    std::cerr << "suite " << selected[i] << ": " << record.value("total", 0) << " checks, "
              << record.value("failures", 0) << " failures\n";
    suites.push_back(std::move(record));
  }
  for (const json& s : skipped)
    std::cerr << "skipped " << s.at("suite").get<std::string>() << ": "
              << s.at("reason").get<std::string>() << "\n";

  auto [rings, azimuths] = parse_resolution(args.mesh.resolution, args.mesh.dim);
  json record{{"options", json{{"suite", args.suite},
                               {"seed", args.seed},
                               {"pairs", args.pairs},
                               {"mesh", json{{"dim", args.mesh.dim},
                                             {"theta", args.mesh.theta},
                                             {"rings", rings},
                                             {"azimuths", azimuths}}},
                               {"theta_text", theta_text(args.mesh.theta)},
                               {"slack_rel", args.slack_rel},
                               {"eq_tol_rel", args.eq_tol_rel}}},
              {"suites", std::move(suites)},
              {"skipped", std::move(skipped)},
              {"pass", all_pass}};
  emit(wrap("capillary-verify-run", std::move(record)), "");
  return all_pass ? kExitOk : kExitViolation;
}

/* ------------------------------------------------------------------ */
/* solve                                                               */

struct SolveArgs {
  MeshArgs mesh;
  std::string phi = "power:3";
  std::string f = "manufactured:r=1.5";
  std::string form;
  std::string out = "solved-body.json";
  std::string report = "solve-report.json";
  std::string trace;
  json config = json::object();
};

int run_solve(const SolveArgs& args) {
  SolveSpec spec{args.mesh, parse_gauge_spec(args.phi), parse_data_spec(args.f),
                 args.form,  args.config,               args.trace};
  SolveOutcome outcome = run_solve_spec(spec);

  if (!args.report.empty()) write_text(args.report, outcome.report_doc.dump(2) + "\n");
  if (outcome.body && !args.out.empty()) write_body(outcome.body.get(), args.out);

  const json& rec = solve_record(outcome);
  bool converged = rec.value("converged", false);
  json record{{"options", solve_options(spec)},
              {"theta_text", theta_text(args.mesh.theta)},
              {"report", rec},
              {"outputs", json{{"body", outcome.body && !args.out.empty() ? json(args.out) : json()},
                               {"report", args.report.empty() ? json() : json(args.report)},
                               {"trace", args.trace.empty() ? json() : json(args.trace)}}},
              {"converged", converged},
              {"exit_status", outcome.status == CAP_OK ? "ok" : "stall"}};
  emit(wrap("capillary-solve-run", std::move(record)), "");

  std::cerr << "solve: theta = " << theta_text(args.mesh.theta)
            << ", converged = " << (converged ? "yes" : "no")
            << ", volume = " << rec.value("volume", 0.0) << ", final residual = "
            << rec.value("final_residual", 0.0) << "\n";
  if (outcome.status != CAP_OK)
    std::cerr << "solve stalled: " << rec.value("stall_reason", std::string("unknown"))
              << " (last good t = " << rec.value("last_good_t", 0.0) << ")\n";
  return outcome.status == CAP_OK ? kExitOk : kExitStall;
}

/* ------------------------------------------------------------------ */
/* sweep                                                               */

struct SweepArgs {
  MeshArgs mesh;
  std::string param = "radius";
  std::string values;
  std::string phi = "power:4";
  std::string f;
  std::string form;
  json config = json::object();
  unsigned jobs = 0;
  std::string out_csv = "sweep.csv";
  std::string save_bodies;
};

std::vector<std::string> split_values(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) die(kExitInvalid, "--values needs a comma-separated list");
  return out;
}

std::string format_number(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int run_sweep(const SweepArgs& args) {
  std::vector<std::string> values = split_values(args.values);

  std::vector<SolveSpec> specs;
  for (const std::string& value : values) {
    SolveSpec spec{args.mesh, parse_gauge_spec(args.phi), json(), args.form, args.config, ""};
    if (args.param == "radius") {
      if (!args.f.empty() && args.f.rfind("manufactured", 0) != 0)
        die(kExitInvalid, "a radius sweep generates manufactured data; drop --f or pass a "
                          "manufactured spec");
      try {
        spec.f = json{{"type", "manufactured"}, {"radius", std::stod(value)}};
      } catch (const std::exception&) {
        die(kExitInvalid, "bad radius '" + value + "'");
      }
    } else if (args.param == "theta") {
      if (args.f.empty()) die(kExitInvalid, "a theta sweep needs --f");
      try {
        spec.mesh.theta = std::stod(value);
      } catch (const std::exception&) {
        die(kExitInvalid, "bad theta '" + value + "'");
      }
      spec.f = parse_data_spec(args.f);
    } else if (args.param == "resolution") {
      if (args.f.empty()) die(kExitInvalid, "a resolution sweep needs --f");
      spec.mesh.resolution = value;
      parse_resolution(value, spec.mesh.dim);  // fail fast on malformed entries
      spec.f = parse_data_spec(args.f);
    } else {
      die(kExitInvalid, "unknown sweep parameter '" + args.param + "'");
    }
    specs.push_back(std::move(spec));
  }

  struct Slot {
    cap_status status = CAP_ERR_INTERNAL;
    json record;
    std::string error;
    std::string body_path;
  };
  std::vector<Slot> slots(specs.size());

  unsigned jobs = args.jobs != 0 ? args.jobs : std::thread::hardware_concurrency();
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(specs.size())));

  std::atomic<size_t> cursor{0};
  auto worker = [&] {
    for (size_t i = cursor.fetch_add(1); i < specs.size(); i = cursor.fetch_add(1)) {
      try {
        SolveOutcome outcome = run_solve_spec(specs[i]);
        slots[i].status = outcome.status;
        slots[i].record = solve_record(outcome);
        if (outcome.body && !args.save_bodies.empty()) {
          slots[i].body_path = args.save_bodies + "/body-" + std::to_string(i) + ".json";
          write_body(outcome.body.get(), slots[i].body_path);
        }
      } catch (const CliError& err) {
        slots[i].status = CAP_ERR_INVALID_ARGUMENT;
        slots[i].error = err.message;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();

  std::ostringstream csv;
  csv << "param,value,status,last_good_t,final_residual,volume,lambda,steps\n";
  json runs = json::array();
  bool any_stall = false;
  for (size_t i = 0; i < specs.size(); ++i) {
    const Slot& slot = slots[i];
    if (!slot.error.empty()) die(kExitInvalid, "sweep value " + values[i] + ": " + slot.error);
    any_stall = any_stall || slot.status != CAP_OK;
    const json& rec = slot.record;
    std::string status = slot.status == CAP_OK ? "ok" : "stall";
    csv << args.param << ',' << values[i] << ',' << status << ','
        << format_number(rec.value("last_good_t", 0.0)) << ','
        << format_number(rec.value("final_residual", 0.0)) << ','
        << format_number(rec.value("volume", 0.0)) << ','
        << format_number(rec.value("lambda", 0.0)) << ','
        << rec.value("steps", json::array()).size() << '\n';
    json run{{"value", values[i]}, {"status", status}, {"report", rec}};
    if (!slot.body_path.empty()) run["body"] = slot.body_path;
    runs.push_back(std::move(run));
  }
  write_text(args.out_csv, csv.str());

  json base{{"mesh", json{{"dim", args.mesh.dim}, {"theta", args.mesh.theta}}},
            {"theta_text", theta_text(args.mesh.theta)},
            {"phi", parse_gauge_spec(args.phi)},
            {"form", args.form.empty() ? json() : json(args.form)}};
  if (!args.f.empty()) base["f"] = args.f;
  json record{{"param", args.param},
              {"values", values},
              {"base", std::move(base)},
              {"runs", std::move(runs)},
              {"outputs", json{{"csv", args.out_csv}}}};
  emit(wrap("capillary-sweep", std::move(record)), "");
  std::cerr << "sweep: " << specs.size() << " solves over " << args.param
            << (any_stall ? ", with stalls" : ", all converged") << ", wrote " << args.out_csv
            << "\n";
  return any_stall ? kExitStall : kExitOk;
}

/* ------------------------------------------------------------------ */

void add_solver_config_options(CLI::App* cmd, json& config) {
  auto number = [cmd, &config](const std::string& flag, const std::string& key,
                               const std::string& help) {
    auto setter = [&config, key](double v) { config[key] = v; };
    cmd->add_option_function<double>(flag, setter, help);
  };
  auto integer = [cmd, &config](const std::string& flag, const std::string& key,
                                const std::string& help) {
    auto setter = [&config, key](int v) { config[key] = v; };
    cmd->add_option_function<int>(flag, setter, help);
  };
  number("--dt-init", "dt_init", "Initial homotopy step");
  number("--dt-min", "dt_min", "Smallest homotopy step before giving up");
  number("--dt-max", "dt_max", "Largest homotopy step");
  number("--newton-tol", "newton_tol", "Newton residual tolerance");
  integer("--newton-max-iter", "newton_max_iter", "Newton iteration cap per step");
  number("--stall-accept-factor", "stall_accept_factor",
         "Accept stagnation below this multiple of the resolution floor");
  integer("--fd-check-every", "fd_check_every",
          "Finite-difference Jacobian spot check period (0 disables)");
  cmd->add_option_function<bool>(
      "--project-even", [&config](bool v) { config["project_even"] = v; },
      "Keep iterates even (default on)");
  cmd->add_option_function<bool>(
      "--diagnostics", [&config](bool v) { config["run_diagnostics"] = v; },
      "Run the linearized-operator diagnostics after the solve (default on)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Capillary convex bodies: meshes, functionals, inequalities, and the "
               "prescribed-measure solver"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML or JSON configuration file (command-line flags win)");
  app.config_formatter(std::make_shared<JsonOrTomlConfig>());

  MakeBodyArgs make_body_args;
  CLI::App* make_body = app.add_subcommand("make-body", "Create a body file");
  make_body->add_option("kind", make_body_args.kind, "cap or perturbed")
      ->required()
      ->check(CLI::IsMember({"cap", "perturbed"}));
  add_mesh_options(make_body, make_body_args.mesh);
  make_body->add_option("--r", make_body_args.r, "Cap radius / base radius")
      ->capture_default_str();
  make_body->add_option("--eps", make_body_args.eps, "Perturbation amplitude")
      ->capture_default_str();
  make_body->add_option("--mode", make_body_args.mode,
                        "Perturbation mode: cosJ (radial) or azK (azimuthal, even K)")
      ->capture_default_str();
  make_body->add_option("--out", make_body_args.out, "Body file path")->capture_default_str();

  MeasureArgs measure_args;
  CLI::App* measure = app.add_subcommand("measure", "Evaluate functionals of a body");
  measure->add_option("body", measure_args.body, "Body file")->required();
  measure->add_option("second", measure_args.second,
                      "Optional second body for mixed volumes (same mesh)");
  measure->add_option("--density", measure_args.densities,
                      "Density to evaluate: surface, lp:P, orlicz, cone-volume (repeatable)");
  measure->add_option("--phi", measure_args.phi, "Gauge spec for orlicz quantities");
  measure->add_option("--density-csv", measure_args.density_csv,
                      "CSV path for the first requested density");
  measure->add_option("--density-out", measure_args.density_out,
                      "JSON path for the first requested density");
  measure->add_option("--out", measure_args.out, "Also write the record to this path");

  CombineArgs combine_args;
  CLI::App* combine = app.add_subcommand("combine", "Gauge combination of two bodies");
  combine->add_option("first", combine_args.first, "First body file")->required();
  combine->add_option("second", combine_args.second, "Second body file")->required();
  combine->add_option("--phi", combine_args.phi, "Gauge spec")->capture_default_str();
  combine->add_option("--alpha", combine_args.alpha, "First weight")->capture_default_str();
  combine->add_option("--beta", combine_args.beta, "Second weight")->capture_default_str();
  combine->add_option("--out", combine_args.out, "Output body file")->capture_default_str();

  VerifyArgs verify_args;
  CLI::App* verify = app.add_subcommand("verify", "Run seeded property suites");
  add_mesh_options(verify, verify_args.mesh);
  verify->add_option("--suite", verify_args.suite,
                     "all, orlicz-minkowski, obm, minkowski, af, variational, equivalence, or "
                     "solver")
      ->capture_default_str();
  verify->add_option("--seed", verify_args.seed, "Base seed for the pair corpus")
      ->capture_default_str();
  verify->add_option("--pairs", verify_args.pairs, "Pairs per suite")->capture_default_str();
  verify->add_option("--slack-rel", verify_args.slack_rel,
                     "Tolerated relative violation of an inequality")
      ->capture_default_str();
  verify->add_option("--eq-tol-rel", verify_args.eq_tol_rel,
                     "Relative margin that counts as equality")
      ->capture_default_str();
  verify->add_option("--gauge", verify_args.gauges, "Gauge spec override (repeatable)");

  SolveArgs solve_args;
  CLI::App* solve = app.add_subcommand("solve", "Solve the prescribed-measure problem");
  add_mesh_options(solve, solve_args.mesh);
  solve->add_option("--phi", solve_args.phi, "Gauge spec")->capture_default_str();
  solve->add_option("--f", solve_args.f,
                    "Data: manufactured:r=R, equality-case, or a JSON file (density document or "
                    "values array)")
      ->capture_default_str();
  solve->add_option("--form", solve_args.form, "unnormalized or normalized")
      ->check(CLI::IsMember({"unnormalized", "normalized"}));
  solve->add_option("--out", solve_args.out, "Solved body file")->capture_default_str();
  solve->add_option("--report", solve_args.report, "Solve report file")->capture_default_str();
  solve->add_option("--trace", solve_args.trace, "Per-step CSV trace");
  add_solver_config_options(solve, solve_args.config);

  SweepArgs sweep_args;
  CLI::App* sweep = app.add_subcommand("sweep", "Concurrent family of solves over one parameter");
  add_mesh_options(sweep, sweep_args.mesh);
  sweep->add_option("--param", sweep_args.param, "radius, theta, or resolution")
      ->check(CLI::IsMember({"radius", "theta", "resolution"}))
      ->capture_default_str();
  sweep->add_option("--values", sweep_args.values, "Comma-separated parameter values")->required();
  sweep->add_option("--phi", sweep_args.phi, "Gauge spec")->capture_default_str();
  sweep->add_option("--f", sweep_args.f, "Data spec (required for theta/resolution sweeps)");
  sweep->add_option("--form", sweep_args.form, "unnormalized or normalized")
      ->check(CLI::IsMember({"unnormalized", "normalized"}));
  sweep->add_option("--jobs", sweep_args.jobs, "Concurrent solves (default: hardware)");
  sweep->add_option("--out-csv", sweep_args.out_csv, "Summary CSV path")->capture_default_str();
  sweep->add_option("--save-bodies", sweep_args.save_bodies,
                    "Directory for per-run body files (must exist)");
  add_solver_config_options(sweep, sweep_args.config);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (make_body->parsed()) return run_make_body(make_body_args);
    if (measure->parsed()) return run_measure(measure_args);
    if (combine->parsed()) return run_combine(combine_args);
    if (verify->parsed()) return run_verify(verify_args);
    if (solve->parsed()) return run_solve(solve_args);
    if (sweep->parsed()) return run_sweep(sweep_args);
  } catch (const CliError& err) {
    std::cerr << "error: " << err.message << "\n";
    return err.code;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitInvalid;
  }
  return kExitInvalid;
}
