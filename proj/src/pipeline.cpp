#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>

#include <integrasym/detail/rng.hpp>
#include <integrasym/pipeline.hpp>
#include <integrasym/version.hpp>

namespace integrasym
{

using detail::next_unit;
using njson = nlohmann::ordered_json;

namespace
{

[[noreturn]] void rethrow_with_path(const parse_error &e, const std::string &path)
{
    // parse_error::what() carries a " (at byte N)" suffix; strip it so the
    // rebuilt message does not repeat it.
    std::string msg = e.what();
    const std::string suffix = " (at byte " + std::to_string(e.offset()) + ")";
    if (msg.size() >= suffix.size()
        && msg.compare(msg.size() - suffix.size(), suffix.size(), suffix) == 0) {
        msg.erase(msg.size() - suffix.size());
    }
    if (dynamic_cast<const unknown_identifier *>(&e) != nullptr) {
        throw unknown_identifier(path + ": " + msg, e.offset());
    }
    throw parse_error(path + ": " + msg, e.offset());
}

expr parse_field_expr(const njson &j, const std::string &path,
                      std::span<const std::string> vars)
{
    if (!j.is_string()) {
        throw schema_error("must be an expression string", path);
    }
    try {
        return parse_expr(j.get<std::string>(), vars);
    } catch (const parse_error &e) {
        rethrow_with_path(e, path);
    }
}

bool is_identifier(const std::string &s)
{
    if (s.empty() || (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_')) {
        return false;
    }
    return std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isalnum(c) != 0 || c == '_';
    });
}

std::size_t get_count(const njson &j, const std::string &path, long long min_value)
{
    if (!j.is_number_integer() && !j.is_number_unsigned()) {
        throw schema_error("must be an integer", path);
    }
    if (!j.is_number_unsigned() && j.get<long long>() < min_value) {
        throw schema_error("must be at least " + std::to_string(min_value), path);
    }
    if (j.is_number_unsigned() && j.get<unsigned long long>()
                                      < static_cast<unsigned long long>(min_value)) {
        throw schema_error("must be at least " + std::to_string(min_value), path);
    }
    return j.get<std::size_t>();
}

double get_positive(const njson &j, const std::string &path)
{
    if (!j.is_number()) {
        throw schema_error("must be a number", path);
    }
    const double v = j.get<double>();
    if (!(v > 0.) || !std::isfinite(v)) {
        throw schema_error("must be a positive finite number", path);
    }
    return v;
}

const std::map<std::string, double tolerances::*> &tolerance_members()
{
    static const std::map<std::string, double tolerances::*> members = {
        {"delta_nu", &tolerances::delta_nu},
        {"delta_oset", &tolerances::delta_oset},
        {"delta_det", &tolerances::delta_det},
        {"delta_rank", &tolerances::delta_rank},
        {"conservation", &tolerances::conservation},
        {"realization", &tolerances::realization},
        {"linearization", &tolerances::linearization},
        {"symmetry", &tolerances::symmetry},
        {"kernel", &tolerances::kernel},
        {"orbit_drift", &tolerances::orbit_drift},
        {"mu_cross", &tolerances::mu_cross},
    };
    return members;
}

} // namespace

void apply_tolerance_override(tolerances &tol, const std::string &name, double value,
                              const std::string &path)
{
    const auto &members = tolerance_members();
    const auto it = members.find(name);
    if (it == members.end()) {
        throw schema_error("unknown tolerance name", path);
    }
    if (!(value > 0.) || !std::isfinite(value)) {
        throw schema_error("must be a positive finite number", path);
    }
    tol.*(it->second) = value;
}

pipeline_command parse_command(std::string_view name)
{
    if (name == "check") {
        return pipeline_command::check;
    }
    if (name == "linearize") {
        return pipeline_command::linearize;
    }
    if (name == "symmetrize") {
        return pipeline_command::symmetrize;
    }
    if (name == "demo-flow") {
        return pipeline_command::demo_flow;
    }
    if (name == "all") {
        return pipeline_command::all;
    }
    throw error("unknown command \"" + std::string(name)
                + "\" (expected check, linearize, symmetrize, demo-flow or all)");
}

system_document parse_system(const std::string &text, std::string name)
{
    njson doc;
    try {
        doc = njson::parse(text);
    } catch (const njson::parse_error &e) {
        throw schema_error(std::string("not valid JSON: ") + e.what(), "(document)");
    }
    if (!doc.is_object()) {
        throw schema_error("document must be a JSON object", "(document)");
    }

    static const std::set<std::string> known = {
        "dimension", "variables", "vector_field", "integrals",        "hamiltonian", "nu",
        "domain",    "samples",   "seed",         "kernel_elements",  "tolerances",  "rescaling",
        "flow"};
    for (const auto &el : doc.items()) {
        if (known.find(el.key()) == known.end()) {
            throw schema_error("unknown field", el.key());
        }
    }
    for (const char *key : {"dimension", "variables", "vector_field", "integrals", "hamiltonian",
                            "nu", "domain", "samples", "seed", "kernel_elements"}) {
        if (!doc.contains(key)) {
            throw schema_error("missing required field", key);
        }
    }

    const std::size_t n = get_count(doc["dimension"], "dimension", 2);

    // variables
    if (!doc["variables"].is_array() || doc["variables"].size() != n) {
        throw schema_error("must be an array of " + std::to_string(n) + " names", "variables");
    }
    static const std::set<std::string> reserved = {"sin", "cos", "exp", "ln", "sqrt"};
    std::vector<std::string> vars;
    vars.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::string path = "variables[" + std::to_string(i) + "]";
        const njson &v = doc["variables"][i];
        if (!v.is_string() || !is_identifier(v.get<std::string>())) {
            throw schema_error("must be an identifier", path);
        }
        const std::string s = v.get<std::string>();
        if (reserved.find(s) != reserved.end()) {
            throw schema_error("collides with a function name", path);
        }
        if (std::find(vars.begin(), vars.end(), s) != vars.end()) {
            throw schema_error("duplicate variable name", path);
        }
        vars.push_back(s);
    }

    const auto parse_list = [&](const char *key, std::size_t count) {
        if (!doc[key].is_array() || doc[key].size() != count) {
            throw schema_error("must be an array of " + std::to_string(count)
                                   + " expression strings",
                               key);
        }
        std::vector<expr> out;
        out.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            out.push_back(parse_field_expr(doc[key][i],
                                           std::string(key) + "[" + std::to_string(i) + "]",
                                           vars));
        }
        return out;
    };

    std::vector<expr> components = parse_list("vector_field", n);
    std::vector<expr> casimirs = parse_list("integrals", n - 2);
    expr hamiltonian = parse_field_expr(doc["hamiltonian"], "hamiltonian", vars);
    expr nu = parse_field_expr(doc["nu"], "nu", vars);

    // domain
    if (!doc["domain"].is_array() || doc["domain"].size() != n) {
        throw schema_error("must be an array of " + std::to_string(n) + " [lo, hi] pairs",
                           "domain");
    }
    std::vector<interval> domain;
    domain.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::string path = "domain[" + std::to_string(i) + "]";
        const njson &d = doc["domain"][i];
        if (!d.is_array() || d.size() != 2 || !d[0].is_number() || !d[1].is_number()) {
            throw schema_error("must be a [lo, hi] pair of numbers", path);
        }
        const interval iv{d[0].get<double>(), d[1].get<double>()};
        if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || !(iv.lo < iv.hi)) {
            throw schema_error("requires finite lo < hi", path);
        }
        domain.push_back(iv);
    }

    system_document out;
    out.name = std::move(name);
    out.samples = get_count(doc["samples"], "samples", 1);

    std::uint64_t seed = 0;
    {
        const njson &s = doc["seed"];
        if (!s.is_number_integer() && !s.is_number_unsigned()) {
            throw schema_error("must be a nonnegative integer", "seed");
        }
        if (!s.is_number_unsigned() && s.get<long long>() < 0) {
            throw schema_error("must be a nonnegative integer", "seed");
        }
        seed = s.get<std::uint64_t>();
    }

    tolerances tol;
    if (doc.contains("tolerances")) {
        if (!doc["tolerances"].is_object()) {
            throw schema_error("must be an object of name/value pairs", "tolerances");
        }
        for (const auto &el : doc["tolerances"].items()) {
            const std::string path = "tolerances." + el.key();
            if (!el.value().is_number()) {
                throw schema_error("must be a number", path);
            }
            apply_tolerance_override(tol, el.key(), el.value().get<double>(), path);
        }
    }

    out.system = make_system(vector_field(vars, std::move(components)), std::move(casimirs),
                             std::move(hamiltonian), std::move(nu), std::move(domain), tol, seed);

    if (doc.contains("rescaling")) {
        const expr m = parse_field_expr(doc["rescaling"], "rescaling", vars);
        out.system = apply_rescaling(out.system, m);
        out.rescaled = true;
    }

    out.u_names = chart_target_names(vars, n);

    // kernel_elements
    if (!doc["kernel_elements"].is_array()) {
        throw schema_error("must be an array", "kernel_elements");
    }
    for (std::size_t k = 0; k < doc["kernel_elements"].size(); ++k) {
        const std::string path = "kernel_elements[" + std::to_string(k) + "]";
        const njson &el = doc["kernel_elements"][k];
        if (!el.is_object()) {
            throw schema_error("must be an object", path);
        }
        for (const auto &item : el.items()) {
            if (item.key() != "matrix" && item.key() != "expressions") {
                throw schema_error("unknown field", path + "." + item.key());
            }
        }
        if (el.contains("matrix") == el.contains("expressions")) {
            throw schema_error("needs exactly one of \"matrix\" or \"expressions\"", path);
        }
        kernel_spec spec;
        if (el.contains("matrix")) {
            const njson &m = el["matrix"];
            if (!m.is_array() || m.size() != n) {
                throw schema_error("must be an array of " + std::to_string(n) + " rows",
                                   path + ".matrix");
            }
            std::vector<double> a;
            a.reserve(n * n);
            for (std::size_t r = 0; r < n; ++r) {
                const std::string rpath = path + ".matrix[" + std::to_string(r) + "]";
                if (!m[r].is_array() || m[r].size() != n) {
                    throw schema_error("must be a row of " + std::to_string(n) + " numbers",
                                       rpath);
                }
                for (std::size_t c = 0; c < n; ++c) {
                    if (!m[r][c].is_number()) {
                        throw schema_error("must be a row of " + std::to_string(n) + " numbers",
                                           rpath);
                    }
                    a.push_back(m[r][c].get<double>());
                }
            }
            spec.matrix = std::move(a);
        } else {
            const njson &ex = el["expressions"];
            if (!ex.is_array() || ex.size() != n) {
                throw schema_error("must be an array of " + std::to_string(n)
                                       + " expression strings",
                                   path + ".expressions");
            }
            std::vector<expr> comps;
            comps.reserve(n);
            for (std::size_t i = 0; i < n; ++i) {
                comps.push_back(parse_field_expr(
                    ex[i], path + ".expressions[" + std::to_string(i) + "]", out.u_names));
            }
            spec.field = vector_field(out.u_names, std::move(comps));
        }
        out.kernels.push_back(std::move(spec));
    }

    // flow
    if (doc.contains("flow")) {
        const njson &f = doc["flow"];
        if (!f.is_object()) {
            throw schema_error("must be an object", "flow");
        }
        for (const auto &item : f.items()) {
            const std::string path = "flow." + item.key();
            if (item.key() == "epsilon") {
                if (!item.value().is_number() || !std::isfinite(item.value().get<double>())
                    || item.value().get<double>() == 0.) {
                    throw schema_error("must be a nonzero finite number", path);
                }
                out.flow.epsilon = item.value().get<double>();
            } else if (item.key() == "horizon") {
                out.flow.horizon = get_positive(item.value(), path);
            } else if (item.key() == "tol") {
                out.flow.tol = get_positive(item.value(), path);
            } else if (item.key() == "integrator") {
                if (!item.value().is_string()) {
                    throw schema_error("must be \"rk4\" or \"rk45\"", path);
                }
                const std::string s = item.value().get<std::string>();
                if (s == "rk4") {
                    out.flow.integrator = integrator_kind::rk4;
                } else if (s == "rk45") {
                    out.flow.integrator = integrator_kind::rk45;
                } else {
                    throw schema_error("must be \"rk4\" or \"rk45\"", path);
                }
            } else {
                throw schema_error("unknown field", path);
            }
        }
    }

    return out;
}

system_document load_system(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("load_system: cannot read " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_system(buf.str(), std::filesystem::path(path).stem().string());
}

namespace
{

// Points feeding the pipeline stages, with how they were obtained. When
// admissibility fails, the residual stages fall back to points that only
// avoid nu = 0: conservation and independence are chart-free statements,
// so they remain testable on a degenerate domain.
struct sampled_points {
    std::vector<point> pts;
    sample_diagnostics diag;
    bool admissible = false;
    std::string cause;
};

std::vector<point> sample_nu_valid(const integrable_system &sys, std::size_t count)
{
    std::mt19937_64 eng(sys.seed);
    const std::size_t budget = 100 * count;
    std::vector<point> pts;
    pts.reserve(count);
    std::vector<double> x(sys.dimension());
    for (std::size_t draws = 0; pts.size() < count && draws < budget; ++draws) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = sys.domain[i].lo + (sys.domain[i].hi - sys.domain[i].lo) * next_unit(eng);
        }
        try {
            const eval_context ctx{sys.variables(), x};
            if (std::abs(eval_expr(sys.nu, ctx)) <= sys.tol.delta_nu) {
                continue;
            }
        } catch (const eval_error &) {
            continue;
        }
        pts.push_back(point{sys.variables(), x});
    }
    return pts;
}

sampled_points acquire_points(const system_document &doc)
{
    sampled_points sp;
    try {
        sp.pts = sample_admissible(doc.system, make_plan(doc.system, doc.samples), &sp.diag);
        sp.admissible = true;
        return sp;
    } catch (const admissibility_exhausted &) {
        // Fall through to the diagnosis below.
    }
    if (sp.diag.max_abs_divergence <= 1e-13) {
        sp.cause = "div X == 0 at every sampled point, so the degeneracy value div X * det "
                   "D(1/nu, C, H) vanishes identically; rescale the system (X' = m X, "
                   "nu' = m nu with a nonconstant multiplier m) to obtain a usable chart";
    } else if (sp.diag.max_abs_nu_gradient <= 1e-13) {
        sp.cause = "nu is constant on the sampled domain, so the chart component 1/nu is "
                   "constant and det DPhi == 0; rescale the system (X' = m X, nu' = m nu "
                   "with a nonconstant multiplier m) to obtain a usable chart";
    } else {
        sp.cause = "the admissibility cuts rejected every draw; see the rejection counts";
    }
    sp.pts = sample_nu_valid(doc.system, doc.samples);
    return sp;
}

njson coords_json(const point &p)
{
    njson j = njson::array();
    for (const double c : p.coords) {
        j.push_back(c);
    }
    return j;
}

void fill_residual(stage_result &r, const residual_report &rep, double tolerance)
{
    r.residual_max = rep.max;
    r.residual_mean = rep.mean;
    r.points = rep.points;
    r.verdict = rep.max <= tolerance ? "PASS" : "FAIL";
    r.details["tolerance"] = tolerance;
    if (!rep.worst.coords.empty()) {
        r.details["worst_point"] = coords_json(rep.worst);
    }
}

// Stage bodies throw; this wrapper turns thrown math errors into
// verdicts so a report is always produced.
template <typename F>
stage_result guarded_stage(std::string name, F &&body)
{
    stage_result r;
    r.name = std::move(name);
    try {
        body(r);
    } catch (const degenerate_point &e) {
        r.verdict = "DEGENERATE";
        r.details["error"] = e.what();
    } catch (const admissibility_exhausted &e) {
        r.verdict = "DEGENERATE";
        r.details["error"] = e.what();
    } catch (const numeric_error &e) {
        r.verdict = "FAIL";
        r.numeric_failure = true;
        r.details["error"] = e.what();
    } catch (const eval_error &e) {
        r.verdict = "FAIL";
        r.numeric_failure = true;
        r.details["error"] = e.what();
    } catch (const error &e) {
        r.verdict = "FAIL";
        r.details["error"] = e.what();
    }
    return r;
}

stage_result run_conservation(const system_document &doc, const sampled_points &sp)
{
    return guarded_stage("conservation", [&](stage_result &r) {
        if (sp.pts.empty()) {
            r.verdict = "DEGENERATE";
            r.details["error"] = "no usable sample points (nu rejected every draw)";
            return;
        }
        fill_residual(r, conservation_check(doc.system, sp.pts), doc.system.tol.conservation);
        r.details["integrals"] = doc.system.casimirs.size() + 1;
    });
}

stage_result run_independence(const system_document &doc, const sampled_points &sp)
{
    return guarded_stage("independence", [&](stage_result &r) {
        if (sp.pts.empty()) {
            r.verdict = "DEGENERATE";
            r.details["error"] = "no usable sample points (nu rejected every draw)";
            return;
        }
        std::size_t failures = 0;
        double proxy_min = std::numeric_limits<double>::infinity();
        double proxy_max = 0;
        for (const point &p : sp.pts) {
            const independence_result res = independence_check(doc.system, p);
            failures += res.independent ? 0 : 1;
            proxy_min = std::min(proxy_min, res.proxy);
            proxy_max = std::max(proxy_max, res.proxy);
        }
        r.points = sp.pts.size();
        r.residual_max = failures > 0 ? 1. : 0.;
        r.residual_mean = static_cast<double>(failures) / static_cast<double>(sp.pts.size());
        r.verdict = failures == 0 ? "PASS" : "FAIL";
        r.details["failures"] = failures;
        r.details["proxy_min"] = proxy_min;
        r.details["proxy_max"] = proxy_max;
        r.details["tolerance"] = doc.system.tol.delta_rank;
    });
}

stage_result run_realization(const system_document &doc, const sampled_points &sp)
{
    return guarded_stage("realization", [&](stage_result &r) {
        if (sp.pts.empty()) {
            r.verdict = "DEGENERATE";
            r.details["error"] = "no usable sample points (nu rejected every draw)";
            return;
        }
        fill_residual(r, realization_check(doc.system, sp.pts), doc.system.tol.realization);
    });
}

stage_result run_admissibility(const system_document &doc, const sampled_points &sp)
{
    return guarded_stage("admissibility", [&](stage_result &r) {
        r.points = sp.diag.accepted;
        r.verdict = sp.admissible ? "PASS" : "DEGENERATE";
        r.details["requested"] = doc.samples;
        r.details["draws"] = sp.diag.draws;
        r.details["accepted"] = sp.diag.accepted;
        r.details["rejected_nu"] = sp.diag.rejected_nu;
        r.details["rejected_oset"] = sp.diag.rejected_oset;
        r.details["rejected_det"] = sp.diag.rejected_det;
        r.details["rejected_eval"] = sp.diag.rejected_eval;
        r.details["max_abs_divergence"] = sp.diag.max_abs_divergence;
        r.details["max_abs_jac_det"] = sp.diag.max_abs_jac_det;
        r.details["max_abs_nu_gradient"] = sp.diag.max_abs_nu_gradient;
        if (!sp.admissible) {
            r.details["cause"] = sp.cause;
        }
    });
}

stage_result run_linearization(const system_document &doc, const linearizing_chart &chart,
                               const sampled_points &sp)
{
    return guarded_stage("linearization", [&](stage_result &r) {
        fill_residual(r, linearization_check(doc.system, chart, sp.pts),
                      doc.system.tol.linearization);
        njson comps = njson::array();
        for (const expr &c : chart.components) {
            comps.push_back(to_string(c));
        }
        r.details["chart"] = comps;
        r.details["jacobian_det"] = to_string(chart.jacobian_det);
    });
}

stage_result run_certificates(const system_document &doc, const linearizing_chart &chart,
                              std::vector<symmetry_certificate> &certs)
{
    return guarded_stage("certificates", [&](stage_result &r) {
        const sample_plan plan = make_plan(doc.system, doc.samples);
        njson entries = njson::array();
        bool all_valid = true;
        double mean_sum = 0;
        for (std::size_t k = 0; k < doc.kernels.size(); ++k) {
            const kernel_spec &spec = doc.kernels[k];
            njson entry;
            entry["index"] = k;
            entry["kind"] = spec.matrix ? "matrix" : "expressions";
            try {
                const kernel_element el = spec.matrix
                                              ? kernel_linear(*spec.matrix, doc.u_names)
                                              : kernel_expressions(*spec.field);
                symmetry_certificate cert =
                    symmetry_certificate_for(doc.system, chart, el, plan);
                njson ybar = njson::array();
                for (const expr &c : cert.kernel.ybar.components()) {
                    ybar.push_back(to_string(c));
                }
                entry["ybar"] = ybar;
                entry["kernel_residual"] = cert.kernel.residual;
                entry["residual_max"] = cert.report.residual.max;
                entry["residual_mean"] = cert.report.residual.mean;
                entry["dy_fd_deviation"] = cert.report.dy_fd_deviation;
                entry["mu_min"] = cert.report.mu_min;
                entry["mu_max"] = cert.report.mu_max;
                entry["mu_finite"] = cert.report.mu_finite;
                if (cert.mu_symbolic) {
                    entry["mu_symbolic"] = to_string(*cert.mu_symbolic);
                }
                entry["valid"] = cert.valid;
                all_valid = all_valid && cert.valid;
                r.residual_max = std::max(r.residual_max, cert.report.residual.max);
                mean_sum += cert.report.residual.mean;
                certs.push_back(std::move(cert));
            } catch (const numeric_error &e) {
                entry["error"] = e.what();
                entry["valid"] = false;
                all_valid = false;
                r.numeric_failure = true;
            } catch (const eval_error &e) {
                entry["error"] = e.what();
                entry["valid"] = false;
                all_valid = false;
                r.numeric_failure = true;
            }
            entries.push_back(std::move(entry));
        }
        r.points = plan.count;
        r.residual_mean =
            doc.kernels.empty() ? 0. : mean_sum / static_cast<double>(doc.kernels.size());
        r.verdict = all_valid ? "PASS" : "FAIL";
        r.details["count"] = doc.kernels.size();
        r.details["tolerance"] = doc.system.tol.symmetry;
        r.details["elements"] = entries;
    });
}

stage_result run_orbit(const system_document &doc,
                       const std::vector<symmetry_certificate> &certs)
{
    return guarded_stage("orbit", [&](stage_result &r) {
        njson entries = njson::array();
        bool pass = true;
        double mean_sum = 0;
        std::size_t checked = 0;
        for (std::size_t k = 0; k < certs.size(); ++k) {
            if (!certs[k].valid) {
                continue;
            }
            njson entry;
            entry["index"] = k;
            try {
                const orbit_report orep = orbit_permutation_check(doc.system, certs[k], doc.flow);
                entry["drift_max"] = orep.drift_max;
                njson per = njson::array();
                for (const double d : orep.per_integral) {
                    per.push_back(d);
                }
                entry["per_integral"] = per;
                entry["checkpoints"] = orep.checkpoints;
                entry["epsilon"] = orep.epsilon;
                pass = pass && orep.drift_max <= doc.system.tol.orbit_drift;
                r.residual_max = std::max(r.residual_max, orep.drift_max);
                mean_sum += orep.drift_max;
            } catch (const numeric_error &e) {
                entry["error"] = e.what();
                pass = false;
                r.numeric_failure = true;
            } catch (const eval_error &e) {
                entry["error"] = e.what();
                pass = false;
                r.numeric_failure = true;
            }
            ++checked;
            entries.push_back(std::move(entry));
        }
        r.points = checked;
        r.residual_mean = checked == 0 ? 0. : mean_sum / static_cast<double>(checked);
        r.verdict = pass ? "PASS" : "FAIL";
        r.details["tolerance"] = doc.system.tol.orbit_drift;
        r.details["certificates"] = entries;
    });
}

enum class stage_id {
    conservation,
    independence,
    realization,
    admissibility,
    linearization,
    certificates,
    orbit
};

std::vector<stage_id> stage_list(pipeline_command cmd)
{
    switch (cmd) {
        case pipeline_command::check:
            return {stage_id::conservation, stage_id::independence, stage_id::realization,
                    stage_id::admissibility};
        case pipeline_command::linearize:
            return {stage_id::admissibility, stage_id::linearization};
        case pipeline_command::symmetrize:
            return {stage_id::admissibility, stage_id::certificates};
        case pipeline_command::demo_flow:
            return {stage_id::admissibility, stage_id::certificates, stage_id::orbit};
        case pipeline_command::all:
            return {stage_id::conservation,  stage_id::independence, stage_id::realization,
                    stage_id::admissibility, stage_id::linearization, stage_id::certificates,
                    stage_id::orbit};
    }
    throw error("run_pipeline: unhandled command");
}

} // namespace

run_report run_pipeline(const system_document &doc, pipeline_command cmd)
{
    run_report rep;
    rep.system = doc.name;
    rep.seed = doc.system.seed;

    const sampled_points sp = acquire_points(doc);
    linearizing_chart chart;
    bool chart_built = false;
    std::vector<symmetry_certificate> certs;

    for (const stage_id s : stage_list(cmd)) {
        if ((s == stage_id::linearization || s == stage_id::certificates) && !chart_built) {
            chart = build_chart(doc.system);
            chart_built = true;
        }
        switch (s) {
            case stage_id::conservation:
                rep.stages.push_back(run_conservation(doc, sp));
                break;
            case stage_id::independence:
                rep.stages.push_back(run_independence(doc, sp));
                break;
            case stage_id::realization:
                rep.stages.push_back(run_realization(doc, sp));
                break;
            case stage_id::admissibility:
                rep.stages.push_back(run_admissibility(doc, sp));
                break;
            case stage_id::linearization:
                rep.stages.push_back(run_linearization(doc, chart, sp));
                break;
            case stage_id::certificates:
                rep.stages.push_back(run_certificates(doc, chart, certs));
                break;
            case stage_id::orbit:
                rep.stages.push_back(run_orbit(doc, certs));
                break;
        }
        if (rep.stages.back().verdict != "PASS") {
            break;
        }
    }
    return rep;
}

std::string report_to_json(const run_report &rep)
{
    njson j;
    j["system"] = rep.system;
    j["seed"] = rep.seed;
    j["version"] = std::string(version);
    njson stages = njson::object();
    njson verdicts = njson::object();
    for (const stage_result &s : rep.stages) {
        njson e;
        e["residual_max"] = s.residual_max;
        e["residual_mean"] = s.residual_mean;
        e["points"] = s.points;
        e["verdict"] = s.verdict;
        e["details"] = s.details;
        stages[s.name] = std::move(e);
        verdicts[s.name] = s.verdict;
    }
    j["stages"] = std::move(stages);
    j["verdicts"] = std::move(verdicts);
    return j.dump(2) + "\n";
}

void emit_report(const run_report &rep, const std::string &path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw io_error("emit_report: cannot open " + path + " for writing");
    }
    out << report_to_json(rep);
    out.flush();
    if (!out) {
        throw io_error("emit_report: write to " + path + " failed");
    }
}

int exit_code(const run_report &rep)
{
    bool fail = false, degenerate = false;
    for (const stage_result &s : rep.stages) {
        if (s.numeric_failure) {
            return 3;
        }
        fail = fail || s.verdict == "FAIL";
        degenerate = degenerate || s.verdict == "DEGENERATE";
    }
    if (fail) {
        return 1;
    }
    if (degenerate) {
        return 2;
    }
    return 0;
}

} // namespace integrasym
