#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "body.hpp"
#include "functionals.hpp"
#include "solver.hpp"

namespace capillary {

// Builders and parsers for the versioned JSON documents the CLI exchanges.
// Every document carries a "format" tag and an integer "version". Payloads
// are deterministic functions of their inputs (doubles serialize as shortest
// round-trip decimals), so identical invocations produce byte-identical
// files; anything non-deterministic (timestamps, host notes) belongs in the
// separate "meta" object that consumers and comparisons ignore.

nlohmann::json mesh_to_json(const CapMesh& mesh);
MeshPtr mesh_from_json(const nlohmann::json& j);

// The support field round-trips bit exactly.
nlohmann::json body_to_json(const CapillaryBody& body);
BodyPtr body_from_json(const nlohmann::json& j);

nlohmann::json density_to_json(const MeasureDensity& density);
MeasureDensity density_from_json(const nlohmann::json& j);

// {"format": format, "version": 1, "record": record, "meta": meta}
nlohmann::json wrap_record(const std::string& format, nlohmann::json record,
                           nlohmann::json meta = nlohmann::json::object());

// Checks the envelope of wrap_record and returns the payload.
const nlohmann::json& unwrap_record(const nlohmann::json& j, const std::string& format);

void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

// Shortest decimal that parses back to exactly v.
std::string format_double(double v);

// Node table: index, polar, azimuth (or signed coordinate), height, value.
void write_density_csv(const std::string& path, const CapMesh& mesh, const ScalarField& values);

// Homotopy trace, one row per accepted step:
// t, dt, newton_iterations, final_residual, lambda, volume, min_h, min_eig.
void write_trace_csv(const std::string& path, const SolveReport& report);

}  // namespace capillary
