#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <integrasym/pipeline.hpp>
#include <integrasym/version.hpp>

namespace
{

struct options {
    std::string input;
    std::string output;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> samples;
    std::vector<std::string> tol_overrides;
};

// NAME=VALUE pairs from --tol, applied over the document's tolerances.
void apply_overrides(integrasym::tolerances &tol, const std::vector<std::string> &pairs)
{
    for (const std::string &pair : pairs) {
        const std::size_t eq = pair.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw integrasym::schema_error("expected NAME=VALUE", "--tol " + pair);
        }
        const std::string name = pair.substr(0, eq);
        double value = 0;
        try {
            std::size_t used = 0;
            value = std::stod(pair.substr(eq + 1), &used);
            if (used != pair.size() - eq - 1) {
                throw std::invalid_argument("trailing characters");
            }
        } catch (const std::exception &) {
            throw integrasym::schema_error("value is not a number", "--tol " + pair);
        }
        integrasym::apply_tolerance_override(tol, name, value, "--tol " + name);
    }
}

int run(const std::string &command, const options &opt)
{
    integrasym::system_document doc = integrasym::load_system(opt.input);
    if (opt.seed) {
        doc.system.seed = *opt.seed;
    }
    if (opt.samples) {
        doc.samples = *opt.samples;
    }
    apply_overrides(doc.system.tol, opt.tol_overrides);

    const integrasym::run_report report =
        integrasym::run_pipeline(doc, integrasym::parse_command(command));
    if (opt.output.empty()) {
        std::cout << integrasym::report_to_json(report);
    } else {
        integrasym::emit_report(report, opt.output);
    }
    return integrasym::exit_code(report);
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Hamilton-Poisson realization, linearizing charts and certified Lie "
                 "symmetries for completely integrable ODE systems"};
    app.set_version_flag("--version", std::string(integrasym::version));
    app.require_subcommand(1);

    options opt;
    const auto add_common = [&opt](CLI::App *cmd) {
        cmd->add_option("--input", opt.input, "system description (JSON)")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--output", opt.output, "report file (default: stdout)");
        cmd->add_option("--seed", opt.seed, "override the document seed");
        cmd->add_option("--samples", opt.samples, "override the document sample count")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--tol", opt.tol_overrides, "tolerance override NAME=VALUE")
            ->allow_extra_args(false);
    };
    add_common(app.add_subcommand("check", "conservation, independence, realization and "
                                           "admissibility checks"));
    add_common(app.add_subcommand("linearize", "build the chart and verify the linearization "
                                               "identity"));
    add_common(app.add_subcommand("symmetrize", "certify a Lie symmetry per kernel element"));
    add_common(app.add_subcommand("demo-flow", "verify trajectory permutation along orbits"));
    add_common(app.add_subcommand("all", "every stage in order"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        // Collapse the library's exit-code family: usage errors are
        // validation failures (1); --help/--version stay 0.
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        return run(app.get_subcommands().front()->get_name(), opt);
    } catch (const integrasym::io_error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const integrasym::schema_error &e) {
        std::cerr << "error: invalid system document, " << e.what() << "\n";
        return 1;
    } catch (const integrasym::parse_error &e) {
        std::cerr << "error: invalid expression, " << e.what() << "\n";
        return 1;
    } catch (const integrasym::error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
