#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <integrasym/pipeline.hpp>

#include "support.hpp"

using namespace integrasym;

namespace
{

std::string systems_dir()
{
    return INTEGRASYM_SYSTEMS_DIR;
}

std::string cli_path()
{
    return INTEGRASYM_CLI_PATH;
}

std::string minimal_doc(const std::string &extra = "", const std::string &drop = "")
{
    // Assemble the scaling system document from named parts so tests can
    // drop or override single fields.
    std::vector<std::pair<std::string, std::string>> fields = {
        {"dimension", "2"},
        {"variables", R"(["x1", "x2"])"},
        {"vector_field", R"(["x1", "x2"])"},
        {"integrals", "[]"},
        {"hamiltonian", R"("x2/x1")"},
        {"nu", R"("x1^2")"},
        {"domain", "[[0.5, 2.0], [-1.0, 1.0]]"},
        {"samples", "50"},
        {"seed", "42"},
        {"kernel_elements", "[]"},
    };
    std::string out = "{";
    bool first = true;
    for (const auto &[key, value] : fields) {
        if (key == drop) {
            continue;
        }
        if (!first) {
            out += ",";
        }
        first = false;
        out += "\"" + key + "\": " + value;
    }
    if (!extra.empty()) {
        out += "," + extra;
    }
    out += "}";
    return out;
}

std::string read_file(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string message_of(const std::function<void()> &fn)
{
    try {
        fn();
    } catch (const error &e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("command names parse")
{
    CHECK(parse_command("check") == pipeline_command::check);
    CHECK(parse_command("linearize") == pipeline_command::linearize);
    CHECK(parse_command("symmetrize") == pipeline_command::symmetrize);
    CHECK(parse_command("demo-flow") == pipeline_command::demo_flow);
    CHECK(parse_command("all") == pipeline_command::all);
    CHECK_THROWS_AS(parse_command("verify"), error);
}

TEST_CASE("tolerance overrides hit the named member and nothing else")
{
    tolerances tol;
    apply_tolerance_override(tol, "symmetry", 1e-4, "tolerances.symmetry");
    CHECK(tol.symmetry == 1e-4);
    CHECK(tol.kernel == 1e-10);

    apply_tolerance_override(tol, "delta_nu", 1e-6, "t");
    CHECK(tol.delta_nu == 1e-6);

    CHECK_THROWS_AS(apply_tolerance_override(tol, "sym", 1e-4, "t"), schema_error);
    CHECK_THROWS_AS(apply_tolerance_override(tol, "symmetry", 0., "t"), schema_error);
    CHECK_THROWS_AS(apply_tolerance_override(tol, "symmetry", -1e-9, "t"), schema_error);

    const std::string msg =
        message_of([] { tolerances t; apply_tolerance_override(t, "nope", 1., "tolerances.nope"); });
    CHECK(msg.find("tolerances.nope") != std::string::npos);
}

TEST_CASE("a well-formed document parses into a runnable system")
{
    const system_document doc = parse_system(minimal_doc(), "scaling");
    CHECK(doc.name == "scaling");
    CHECK(doc.samples == 50);
    CHECK(doc.system.seed == 42);
    CHECK(doc.system.dimension() == 2);
    CHECK(doc.u_names == std::vector<std::string>{"u1", "u2"});
    CHECK(doc.kernels.empty());
    CHECK_FALSE(doc.rescaled);
    CHECK(to_string(doc.system.hamiltonian) == "x2/x1");
}

TEST_CASE("schema violations name the offending path")
{
    // Not JSON at all.
    CHECK_THROWS_AS(parse_system("{", "t"), schema_error);
    // Top level must be an object.
    CHECK_THROWS_AS(parse_system("[1,2]", "t"), schema_error);

    const auto msg_for = [](const std::string &text) {
        return message_of([&text] { parse_system(text, "t"); });
    };

    CHECK(msg_for(minimal_doc("", "nu")).find("nu") != std::string::npos);
    CHECK(msg_for(minimal_doc("", "domain")).find("domain") != std::string::npos);
    CHECK(msg_for(minimal_doc(R"("extra_key": 1)")).find("extra_key") != std::string::npos);

    // Dimension and shape mismatches.
    CHECK_THROWS_AS(parse_system(R"({"dimension": 1, "variables": ["x1"],
        "vector_field": ["x1"], "integrals": [], "hamiltonian": "x1", "nu": "x1",
        "domain": [[0.5, 2.0]]})",
                                 "t"),
                    schema_error);
    CHECK(msg_for(minimal_doc(R"("kernel_elements": [{"matrix": [[1, 0], [0]]}])"))
              .find("kernel_elements") != std::string::npos);
    CHECK(msg_for(minimal_doc(R"("kernel_elements": [{}])")).find("kernel_elements")
          != std::string::npos);
    CHECK(msg_for(minimal_doc(
                      R"("kernel_elements": [{"matrix": [[1, 0], [0, 1]], "expressions": ["u1", "u2"]}])"))
              .find("kernel_elements") != std::string::npos);

    // Domain intervals must be finite and increasing.
    std::string bad_domain = minimal_doc();
    const auto pos = bad_domain.find("[[0.5, 2.0]");
    REQUIRE(pos != std::string::npos);
    bad_domain.replace(pos, 11, "[[2.5, 2.0]");
    CHECK(msg_for(bad_domain).find("domain") != std::string::npos);

    // Variables must be distinct identifiers, not function names.
    std::string dup = minimal_doc();
    const auto vpos = dup.find(R"(["x1", "x2"])");
    REQUIRE(vpos != std::string::npos);
    dup.replace(vpos, 12, R"(["x1", "x1"])");
    CHECK_THROWS_AS(parse_system(dup, "t"), schema_error);

    std::string fn = minimal_doc();
    const auto fpos = fn.find(R"(["x1", "x2"])");
    fn.replace(fpos, 12, R"(["x1", "sin"])");
    CHECK_THROWS_AS(parse_system(fn, "t"), schema_error);

    // Flow block validation.
    CHECK(msg_for(minimal_doc(R"("flow": {"integrator": "euler"})")).find("integrator")
          != std::string::npos);
    CHECK(msg_for(minimal_doc(R"("flow": {"epsilon": 0.0})")).find("epsilon")
          != std::string::npos);
    CHECK(msg_for(minimal_doc(R"("flow": {"horizon": -1.0})")).find("horizon")
          != std::string::npos);

    CHECK(msg_for(minimal_doc(R"("samples": 0)", "samples")).find("samples")
          != std::string::npos);
    CHECK(msg_for(minimal_doc(R"("tolerances": {"bogus": 1e-6})")).find("bogus")
          != std::string::npos);
}

TEST_CASE("expression errors keep their field path and byte offset")
{
    std::string broken = minimal_doc();
    const auto pos = broken.find(R"("x2/x1")");
    REQUIRE(pos != std::string::npos);
    broken.replace(pos, 7, R"("x2//x1")");
    bool threw = false;
    try {
        parse_system(broken, "t");
    } catch (const parse_error &e) {
        threw = true;
        const std::string msg = e.what();
        CHECK(msg.find("hamiltonian") != std::string::npos);
    }
    CHECK(threw);

    // Unknown identifiers are flagged as such, with the path attached.
    std::string unknown = minimal_doc();
    const auto upos = unknown.find(R"("x1^2")");
    unknown.replace(upos, 6, R"("y1^2")");
    CHECK_THROWS_AS(parse_system(unknown, "t"), unknown_identifier);
}

TEST_CASE("rescaling in the document is applied before anything runs")
{
    const std::string text = read_file(systems_dir() + "/rigidbody3d_rescaled.json");
    const system_document doc = parse_system(text, "rigidbody3d_rescaled");
    CHECK(doc.rescaled);
    // X' = x1 * (x2 x3, -2 x1 x3, x1 x2).
    CHECK(structurally_equal(doc.system.field.component(0),
                             simplify(parse_expr("x1*x2*x3", doc.system.variables()))));
    CHECK(structurally_equal(doc.system.nu,
                             simplify(parse_expr("0.5*x1", doc.system.variables()))));
}

TEST_CASE("load_system reads bundled documents and rejects missing files")
{
    const system_document doc = load_system(systems_dir() + "/scaling2d.json");
    CHECK(doc.name == "scaling2d");
    CHECK(doc.samples == 1000);
    CHECK(doc.kernels.size() == 2);
    CHECK_THROWS_AS(load_system(systems_dir() + "/does_not_exist.json"), io_error);
}

TEST_CASE("the pipeline runs the documented stages in order")
{
    system_document doc = load_system(systems_dir() + "/scaling2d.json");
    doc.samples = 100;

    const run_report check = run_pipeline(doc, pipeline_command::check);
    std::vector<std::string> names;
    for (const auto &st : check.stages) {
        names.push_back(st.name);
        CHECK(st.verdict == "PASS");
    }
    CHECK(names
          == std::vector<std::string>{"conservation", "independence", "realization",
                                      "admissibility"});

    const run_report all = run_pipeline(doc, pipeline_command::all);
    REQUIRE(all.stages.size() == 7);
    CHECK(all.stages[4].name == "linearization");
    CHECK(all.stages[5].name == "certificates");
    CHECK(all.stages[6].name == "orbit");
    CHECK(exit_code(all) == 0);

    const run_report lin = run_pipeline(doc, pipeline_command::linearize);
    REQUIRE(lin.stages.size() == 2);
    CHECK(lin.stages[0].name == "admissibility");
    CHECK(lin.stages[1].name == "linearization");

    const run_report sym = run_pipeline(doc, pipeline_command::symmetrize);
    REQUIRE(sym.stages.size() == 2);
    CHECK(sym.stages[1].name == "certificates");

    const run_report demo = run_pipeline(doc, pipeline_command::demo_flow);
    REQUIRE(demo.stages.size() == 3);
    CHECK(demo.stages[2].name == "orbit");
}

TEST_CASE("a failing early stage gates the rest")
{
    system_document doc = load_system(systems_dir() + "/scaling2d.json");
    doc.samples = 50;
    // Corrupt the Hamiltonian: conservation must FAIL and stop the run.
    doc.system = make_system(doc.system.field, doc.system.casimirs,
                             parse_expr("x1 + x2", doc.system.variables()), doc.system.nu,
                             doc.system.domain, doc.system.tol, doc.system.seed);
    const run_report rep = run_pipeline(doc, pipeline_command::all);
    REQUIRE(rep.stages.size() == 1);
    CHECK(rep.stages[0].name == "conservation");
    CHECK(rep.stages[0].verdict == "FAIL");
    CHECK(exit_code(rep) == 1);
}

TEST_CASE("a degenerate admissibility verdict names the cause and stops")
{
    system_document doc = load_system(systems_dir() + "/rigidbody3d.json");
    const run_report rep = run_pipeline(doc, pipeline_command::all);
    REQUIRE_FALSE(rep.stages.empty());
    const stage_result &last = rep.stages.back();
    CHECK(last.name == "admissibility");
    CHECK(last.verdict == "DEGENERATE");
    const std::string cause = last.details.value("cause", "");
    CHECK(cause.find("div X == 0") != std::string::npos);
    CHECK(cause.find("rescale") != std::string::npos);
    CHECK(exit_code(rep) == 2);

    // The earlier checks still ran (on nu-valid points) and passed.
    CHECK(rep.stages[0].name == "conservation");
    CHECK(rep.stages[0].verdict == "PASS");
}

TEST_CASE("reports are deterministic and carry every stage")
{
    system_document doc = load_system(systems_dir() + "/quadratic2d.json");
    doc.samples = 200;
    const run_report a = run_pipeline(doc, pipeline_command::all);
    const run_report b = run_pipeline(doc, pipeline_command::all);
    const std::string ja = report_to_json(a);
    const std::string jb = report_to_json(b);
    CHECK(ja == jb);
    CHECK(exit_code(a) == 0);

    const auto parsed = nlohmann::ordered_json::parse(ja);
    CHECK(parsed["system"] == "quadratic2d");
    CHECK(parsed["seed"] == 42);
    REQUIRE(parsed.contains("stages"));
    REQUIRE(parsed["stages"].contains("certificates"));
    const auto &certs = parsed["stages"]["certificates"]["details"]["elements"];
    REQUIRE(certs.size() == 2);
    CHECK(certs[0]["valid"] == true);
    CHECK(certs[0]["mu_symbolic"] == "0.3333333333333333");
    CHECK(parsed.contains("verdicts"));
    CHECK(ja.back() == '\n');
}

TEST_CASE("emit_report writes the exact JSON bytes")
{
    system_document doc = load_system(systems_dir() + "/scaling2d.json");
    doc.samples = 25;
    const run_report rep = run_pipeline(doc, pipeline_command::check);
    const std::string path = "pipeline_emit_test.json";
    emit_report(rep, path);
    CHECK(read_file(path) == report_to_json(rep));
    std::remove(path.c_str());

    CHECK_THROWS_AS(emit_report(rep, "no_such_dir/x/y.json"), io_error);
}

TEST_CASE("the command line binary round-trips documents end to end")
{
    const std::string cli = cli_path();
    const std::string dir = systems_dir();

    const auto run = [&](const std::string &args) {
        const std::string cmd = cli + " " + args + " >cli_stdout.txt 2>cli_stderr.txt";
        const int raw = std::system(cmd.c_str());
        return WEXITSTATUS(raw);
    };

    CHECK(run("check --input " + dir + "/scaling2d.json") == 0);
    CHECK(run("all --input " + dir + "/quadratic2d.json --output cli_a.json") == 0);
    CHECK(run("all --input " + dir + "/quadratic2d.json --output cli_b.json") == 0);
    CHECK(read_file("cli_a.json") == read_file("cli_b.json"));

    CHECK(run("check --input " + dir + "/rigidbody3d.json") == 2);
    CHECK(run("all --input " + dir + "/rigidbody3d_rescaled.json") == 0);

    // Usage errors: missing input, unknown tolerance, malformed override.
    CHECK(run("check --input " + dir + "/missing.json") == 1);
    CHECK(run("check --input " + dir + "/scaling2d.json --tol bogus=1") == 1);
    CHECK(run("check --input " + dir + "/scaling2d.json --tol symmetry") == 1);
    CHECK(run("frobnicate --input " + dir + "/scaling2d.json") == 1);
    CHECK(run("--help") == 0);
    CHECK(run("--version") == 0);

    // Seed override changes the sample set but not the verdicts.
    CHECK(run("check --input " + dir + "/scaling2d.json --seed 7 --output cli_c.json") == 0);
    const auto c = nlohmann::ordered_json::parse(read_file("cli_c.json"));
    CHECK(c["seed"] == 7);

    std::remove("cli_a.json");
    std::remove("cli_b.json");
    std::remove("cli_c.json");
    std::remove("cli_stdout.txt");
    std::remove("cli_stderr.txt");
}
