#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bigtan/errors.hpp"
#include "bigtan/harness.hpp"

// Command line front end for the verification suite. Exit codes: 0 when all
// requested checks pass, 1 when a check fails or a runtime error aborts the
// run, 2 for configuration or usage problems.

namespace {

struct CliValues {
    std::string config_path;
    std::string metric;
    int dim = 0;
    double eps = 0.0;
    std::vector<double> drift;
    int samples = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> tolerances;
    std::vector<std::string> only;
    std::string report;
    std::string format;
    int index = 0;
};

bool given(const CLI::App* cmd, const std::string& name) {
    const CLI::Option* opt = cmd->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
}

void add_structure_options(CLI::App* cmd, CliValues& v) {
    cmd->add_option("--config", v.config_path, "JSON configuration file; flags override it");
    cmd->add_option("--metric", v.metric,
                    "metric family: euclidean, riemannian_conformal, randers");
    cmd->add_option("--dim", v.dim, "base dimension, 2 to 8");
    cmd->add_option("--eps", v.eps, "conformal exponent scale");
    cmd->add_option("--drift", v.drift, "randers drift covector, comma separated")
        ->delimiter(',');
    cmd->add_option("--seed", v.seed, "master seed for the sample streams");
}

double parse_tolerance_value(const std::string& text, const std::string& entry) {
    try {
        std::size_t used = 0;
        const double value = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return value;
    } catch (const std::exception&) {
        throw bigtan::ConfigError("--tol expects name=value, got '" + entry + "'");
    }
}

bigtan::RunConfig build_config(const CLI::App* cmd, const CliValues& v) {
    bigtan::RunConfig cfg;
    if (given(cmd, "--config")) cfg = bigtan::RunConfig::from_json_file(v.config_path);
    if (given(cmd, "--metric")) {
        try {
            cfg.family = bigtan::family_from_name(v.metric);
        } catch (const bigtan::Error& e) {
            throw bigtan::ConfigError(e.what());
        }
    }
    if (given(cmd, "--dim")) cfg.dim = v.dim;
    if (given(cmd, "--eps")) cfg.conformal_eps = v.eps;
    if (given(cmd, "--drift")) {
        cfg.drift.resize(static_cast<Eigen::Index>(v.drift.size()));
        for (std::size_t i = 0; i < v.drift.size(); ++i)
            cfg.drift[static_cast<Eigen::Index>(i)] = v.drift[i];
    }
    if (given(cmd, "--seed")) cfg.seed = v.seed;
    if (given(cmd, "--samples")) cfg.samples = v.samples;
    if (given(cmd, "--tol")) {
        for (const std::string& entry : v.tolerances) {
            const std::size_t eq = entry.find('=');
            if (eq == std::string::npos || eq == 0)
                throw bigtan::ConfigError("--tol expects name=value, got '" + entry + "'");
            cfg.tolerance_overrides[entry.substr(0, eq)] =
                parse_tolerance_value(entry.substr(eq + 1), entry);
        }
    }
    if (given(cmd, "--only")) {
        std::vector<std::string> names;
        for (const std::string& name : v.only) {
            if (!name.empty()) names.push_back(name);
        }
        cfg.only = std::move(names);
    }
    if (given(cmd, "--report")) cfg.report_path = v.report;
    if (given(cmd, "--format")) cfg.format = v.format;
    cfg.validate();
    return cfg;
}

int run_verify(const CLI::App* cmd, const CliValues& v) {
    const bigtan::RunConfig cfg = build_config(cmd, v);
    const std::vector<bigtan::CheckReport> reports = bigtan::run_suite(cfg);
    std::cout << bigtan::render_report(cfg, reports);
    bigtan::write_report_file(cfg, reports);
    return bigtan::all_passed(reports) ? 0 : 1;
}

int run_list_checks(const CLI::App* cmd, const CliValues& v) {
    const bigtan::RunConfig cfg = build_config(cmd, v);
    const auto& registry = bigtan::check_registry();
    std::size_t name_width = 5;
    std::size_t ref_width = 3;
    for (const auto& spec : registry) {
        name_width = std::max(name_width, spec.name.size());
        ref_width = std::max(ref_width, spec.paper_ref.size());
    }
    const auto pad = [](const std::string& s, std::size_t width) {
        return s + std::string(width > s.size() ? width - s.size() : 0, ' ');
    };
    std::cout << pad("check", name_width) << "  " << pad("ref", ref_width) << "  tolerance\n";
    for (const auto& spec : registry) {
        char tail[32];
        std::snprintf(tail, sizeof tail, "  %.1e", bigtan::check_tolerance(spec, cfg));
        std::cout << pad(spec.name, name_width) << "  " << pad(spec.paper_ref, ref_width) << tail
                  << "\n";
    }
    std::cout << registry.size() << " checks registered (tolerances shown for metric "
              << bigtan::family_name(cfg.family) << ")\n";
    return 0;
}

int run_show_point(const CLI::App* cmd, const CliValues& v) {
    const bigtan::RunConfig cfg = build_config(cmd, v);
    std::cout << bigtan::describe_point(cfg, v.index);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Verification suite for the vertical geometry of the doubled tangent bundle"};
    app.require_subcommand(1);

    CliValues verify_values;
    CLI::App* verify = app.add_subcommand("verify", "run the identity checks and report");
    add_structure_options(verify, verify_values);
    verify->add_option("--samples", verify_values.samples, "sampled points per check");
    verify->add_option("--tol", verify_values.tolerances,
                       "tolerance override as name=value, repeatable");
    verify->add_option("--only", verify_values.only, "comma separated subset of check names")
        ->delimiter(',');
    verify->add_option("--report", verify_values.report, "write the rendered report to a file");
    verify->add_option("--format", verify_values.format, "output format: text or json");

    CliValues list_values;
    CLI::App* list_checks =
        app.add_subcommand("list-checks", "print the registered checks and tolerances");
    add_structure_options(list_checks, list_values);

    CliValues show_values;
    CLI::App* show_point =
        app.add_subcommand("show-point", "print one deterministically sampled point");
    add_structure_options(show_point, show_values);
    show_point->add_option("--index", show_values.index, "sample index within the stream");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand(verify)) return run_verify(verify, verify_values);
        if (app.got_subcommand(list_checks)) return run_list_checks(list_checks, list_values);
        if (app.got_subcommand(show_point)) return run_show_point(show_point, show_values);
        std::cerr << "error: no subcommand selected\n";
        return 2;
    } catch (const bigtan::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
