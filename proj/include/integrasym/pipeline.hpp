#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include <integrasym/symgen.hpp>

namespace integrasym
{

// One commuting-field candidate from a system document: either a linear
// element given by its matrix or an explicit expression field over the
// chart target variables.
struct kernel_spec {
    std::optional<std::vector<double>> matrix; // row-major n x n
    std::optional<vector_field> field;
};

// A validated system description with its run controls. The rescaling,
// when present in the document, has already been applied to the system.
struct system_document {
    std::string name;
    integrable_system system;
    std::size_t samples = 1000;
    std::vector<std::string> u_names; // chart target names for this system
    std::vector<kernel_spec> kernels;
    flow_spec flow;
    bool rescaled = false;
};

enum class pipeline_command { check, linearize, symmetrize, demo_flow, all };

// Accepts "check", "linearize", "symmetrize", "demo-flow", "all".
pipeline_command parse_command(std::string_view name);

// Sets the named tolerance member. Throws schema_error (with the given
// path) on an unknown name or a non-positive value; the CLI routes its
// --tol NAME=VALUE overrides through here.
void apply_tolerance_override(tolerances &tol, const std::string &name, double value,
                              const std::string &path);

// Validates the JSON text against the document schema. Shape violations
// raise schema_error naming the offending field path; expression text
// violations raise parse_error with a byte offset.
system_document parse_system(const std::string &text, std::string name);

// Reads and parses a document file; the name is the file stem.
// Throws io_error when the file cannot be read.
system_document load_system(const std::string &path);

struct stage_result {
    std::string name;
    double residual_max = 0;
    double residual_mean = 0;
    std::size_t points = 0;
    std::string verdict; // PASS | FAIL | DEGENERATE
    nlohmann::ordered_json details = nlohmann::ordered_json::object();
    // True when the FAIL came from a numeric breakdown (no convergence,
    // step underflow, singular solve) rather than a violated bound.
    bool numeric_failure = false;
};

struct run_report {
    std::string system;
    std::uint64_t seed = 0;
    std::vector<stage_result> stages; // executed stages, in run order
};

// Runs the stages the command selects, in order: conservation,
// independence, realization, admissibility, linearization, certificates,
// orbit. A FAIL or DEGENERATE verdict skips every later stage. Math
// errors become stage verdicts; this function only throws on broken
// preconditions (never on bad numerics).
run_report run_pipeline(const system_document &doc, pipeline_command cmd);

// Deterministic pretty-printed JSON: byte-identical for identical runs.
std::string report_to_json(const run_report &rep);

// Writes report_to_json to the path. Throws io_error.
void emit_report(const run_report &rep, const std::string &path);

// 0 all PASS; 1 some stage FAIL; 2 DEGENERATE; 3 numeric failure.
// Numeric failure dominates, then FAIL, then DEGENERATE.
int exit_code(const run_report &rep);

} // namespace integrasym
