#pragma once

// Command-line front end of `verify`.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hsm/suites.hpp"

namespace hsm {

enum class ReportFormat { Json, Text };

struct RunConfig {
    std::vector<std::string> suites;
    std::optional<std::string> graph_path;
    std::optional<std::string> exhaustion_path;
    ReportFormat format = ReportFormat::Text;
    SuiteConfig suite;
};

/// Exit statuses of `verify`.
constexpr int kExitPass = 0;
constexpr int kExitFailure = 1;
constexpr int kExitInputError = 2;

/// Loads the referenced files into config.suite; throws InputError or
/// GraphError on unreadable or invalid input.
void load_inputs(RunConfig& config);

/// Runs the selected suites and writes the report to `out`. Returns
/// kExitPass iff every suite passes.
int run(RunConfig config, std::ostream& out);

/// Parses arguments, runs, and maps every input problem to kExitInputError
/// with a diagnostic on `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hsm
