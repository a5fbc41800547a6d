#include "hsm/cli.hpp"

#include <algorithm>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "hsm/graph_io.hpp"
#include "hsm/report.hpp"

namespace hsm {

void load_inputs(RunConfig& config) {
    if (config.graph_path) config.suite.graph = load_pinned_graph(*config.graph_path);
    if (config.exhaustion_path) config.suite.exhaustion = load_exhaustion(*config.exhaustion_path);
}

int run(RunConfig config, std::ostream& out) {
    if (config.suites.empty()) throw std::invalid_argument("no suite selected");
    load_inputs(config);
    std::vector<SuiteResult> results;
    for (const auto& name : config.suites) results.push_back(run_suite(name, config.suite));
    out << (config.format == ReportFormat::Json ? render_json_lines(results) : render_text(results));
    return all_passed(results) ? kExitPass : kExitFailure;
}

namespace {

std::vector<std::string> split_suites(const std::vector<std::string>& raw) {
    std::vector<std::string> out;
    for (const auto& item : raw) {
        std::stringstream ss(item);
        std::string name;
        while (std::getline(ss, name, ','))
            if (!name.empty()) out.push_back(name);
    }
    if (std::find(out.begin(), out.end(), "all") != out.end()) return suite_names();
    for (const auto& name : out)
        if (std::find(suite_names().begin(), suite_names().end(), name) == suite_names().end())
            throw std::invalid_argument("unknown suite '" + name + "'");
    return out;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Exact and Monte Carlo verification of pinned-graph field identities"};
    RunConfig config;
    std::vector<std::string> suites;
    std::string report = "text";
    std::string graph, exhaustion;
    double tolerance = 0.0;
    std::string names;
    for (const auto& n : suite_names()) names += (names.empty() ? "" : ", ") + n;

    app.add_option("--suite", suites, "comma-separated suites, or 'all': " + names)->required()->delimiter(',');
    app.add_option("--graph", graph, "pinned graph JSON file")->check(CLI::ExistingFile);
    app.add_option("--exhaustion", exhaustion, "host exhaustion JSON file")->check(CLI::ExistingFile);
    app.add_option("--seed", config.suite.chain.seed, "random seed")->capture_default_str();
    app.add_option("--samples", config.suite.chain.samples, "retained samples per run, split across chains")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app.add_option("--burn-in", config.suite.chain.burn_in, "adaptive burn-in sweeps per chain")->capture_default_str();
    app.add_option("--thinning", config.suite.chain.thinning, "sweeps per retained sample")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app.add_option("--chains", config.suite.chains, "independent chains per run")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app.add_option("--workers", config.suite.workers, "worker threads (0: all cores)")->capture_default_str();
    app.add_option("--s-draws", config.suite.s_draws, "s | u draws per retained sample")->capture_default_str();
    app.add_option("--report", report, "report format")->check(CLI::IsMember({"json", "text"}))->capture_default_str();
    app.add_option("--z-threshold", config.suite.z_threshold, "|z| limit for statistical verdicts")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app.add_option("--tol", tolerance, "override every exact tolerance")->check(CLI::PositiveNumber);
    app.add_option("--instances", config.suite.instances, "random instances for algebra and consistency")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app.add_option("--green-scale", config.suite.green_scale, "test hook: scale the Green's function")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app.add_option("--cone-boundary-scale", config.suite.cone_boundary_scale,
                   "test hook: move the Letac cone boundary")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitPass;
    } catch (const CLI::ParseError& e) {
        err << "verify: " << e.what() << "\n";
        return kExitInputError;
    }

    try {
        config.suites = split_suites(suites);
        config.format = report == "json" ? ReportFormat::Json : ReportFormat::Text;
        if (!graph.empty()) config.graph_path = graph;
        if (!exhaustion.empty()) config.exhaustion_path = exhaustion;
        if (app.count("--tol")) config.suite.tolerance = tolerance;
        config.suite.chain.validate();
        load_inputs(config);
        config.graph_path.reset();
        config.exhaustion_path.reset();
    } catch (const std::exception& e) {
        err << "verify: " << e.what() << "\n";
        return kExitInputError;
    }

    try {
        return run(std::move(config), out);
    } catch (const std::exception& e) {
        err << "verify: run aborted: " << e.what() << "\n";
        return kExitFailure;
    }
}

}  // namespace hsm
